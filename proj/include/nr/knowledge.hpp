#pragma once

// Knowledge base linking numeric entities to reference ranges and HPO
// phenotype triples, plus granular severity bands and synonym sets.
//
// File layout: one file, five sections, each introduced by a marker line
// and a header row naming the columns.
//
//   #ENTITIES   entity_id,name,abbreviation
//   #RANGES     entity_id,name,abbreviation,unit,lower,upper
//   #TRIPLES    entity_id,below_hpo,above_hpo,normal_hpo
//   #GRANULAR   primary_hpo,unit,lower,upper,granular_hpo
//   #SYNONYMS   entity_id,synonym
//
// Any other line starting with '#' is a comment. Blank lines are ignored.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nr/detail/text.hpp"
#include "nr/error.hpp"

namespace nr {

enum class EntityId : std::int32_t {};

inline std::int32_t to_int(EntityId id) { return static_cast<std::int32_t>(id); }
inline std::string to_string(EntityId id) { return std::to_string(to_int(id)); }

using HpoId = std::string;

struct NumericEntity {
  EntityId id{};
  std::string name;
  std::string abbreviation;
  bool operator==(const NumericEntity&) const = default;
};

struct ReferenceRange {
  EntityId entity{};
  std::string unit;
  double lower = 0;
  double upper = 0;
  bool operator==(const ReferenceRange&) const = default;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct PhenotypeTriple {
  EntityId entity{};
  HpoId below;   // affirmed when value < lower
  HpoId above;   // affirmed when value > upper
  HpoId normal;  // negated when lower <= value <= upper
  bool operator==(const PhenotypeTriple&) const = default;
};

struct GranularBand {
  HpoId primary;
  std::string unit;
  double lower = 0;
  double upper = 0;
  HpoId granular;
  bool operator==(const GranularBand&) const = default;

  bool contains(double v) const { return lower <= v && v <= upper; }
};

struct Synonym {
  EntityId entity{};
  std::string text;
  bool operator==(const Synonym&) const = default;
};

/// Raw table contents in declaration order. Not checked for consistency.
struct KnowledgeTables {
  std::vector<NumericEntity> entities;
  std::vector<ReferenceRange> ranges;
  std::vector<PhenotypeTriple> triples;
  std::vector<GranularBand> bands;
  std::vector<Synonym> synonyms;
  bool operator==(const KnowledgeTables&) const = default;
};

struct Violation {
  std::string rule;
  std::string row;  // offending row, rendered in file syntax
};

/// Read-only view over KnowledgeTables with id lookups.
class KnowledgeBase {
 public:
  KnowledgeBase() = default;
  explicit KnowledgeBase(KnowledgeTables tables) : tables_(std::move(tables)) { index(); }

  const KnowledgeTables& tables() const { return tables_; }
  const std::vector<NumericEntity>& entities() const { return tables_.entities; }
  const std::vector<GranularBand>& bands() const { return tables_.bands; }

  const NumericEntity* find_entity(EntityId id) const {
    const auto it = entity_pos_.find(id);
    return it == entity_pos_.end() ? nullptr : &tables_.entities[it->second];
  }

  const NumericEntity& entity(EntityId id) const {
    if (const auto* e = find_entity(id)) return *e;
    throw ValidationError("unknown entity id " + to_string(id));
  }

  /// Ranges of one entity in declaration order.
  std::vector<ReferenceRange> ranges(EntityId id) const {
    std::vector<ReferenceRange> out;
    for (const auto& r : tables_.ranges)
      if (r.entity == id) out.push_back(r);
    return out;
  }

  std::optional<ReferenceRange> range(EntityId id, std::string_view unit) const {
    for (const auto& r : tables_.ranges)
      if (r.entity == id && r.unit == unit) return r;
    return std::nullopt;
  }

  const PhenotypeTriple* find_triple(EntityId id) const {
    for (const auto& t : tables_.triples)
      if (t.entity == id) return &t;
    return nullptr;
  }

  const PhenotypeTriple& triple(EntityId id) const {
    if (const auto* t = find_triple(id)) return *t;
    throw ValidationError("no phenotype triple for entity " + to_string(id));
  }

  /// Synonyms of an entity: name, abbreviation, then listed synonyms, deduplicated.
  const std::vector<std::string>& synonyms(EntityId id) const {
    static const std::vector<std::string> empty;
    const auto it = synonym_sets_.find(id);
    return it == synonym_sets_.end() ? empty : it->second;
  }

  const std::map<EntityId, std::vector<std::string>>& synonym_sets() const { return synonym_sets_; }

  bool operator==(const KnowledgeBase& o) const { return tables_ == o.tables_; }

 private:
  void index() {
    for (std::size_t i = 0; i < tables_.entities.size(); ++i)
      entity_pos_.emplace(tables_.entities[i].id, i);
    auto add = [this](EntityId id, const std::string& s) {
      auto& set = synonym_sets_[id];
      if (!s.empty() && std::find(set.begin(), set.end(), s) == set.end()) set.push_back(s);
    };
    for (const auto& e : tables_.entities) {
      add(e.id, e.name);
      add(e.id, e.abbreviation);
    }
    for (const auto& s : tables_.synonyms) add(s.entity, s.text);
  }

  KnowledgeTables tables_;
  std::map<EntityId, std::size_t> entity_pos_;
  std::map<EntityId, std::vector<std::string>> synonym_sets_;
};

namespace detail {

inline std::string render(const NumericEntity& e) {
  return to_string(e.id) + "," + e.name + "," + e.abbreviation;
}

inline std::string render(const ReferenceRange& r, const NumericEntity* e) {
  return to_string(r.entity) + "," + (e ? e->name : std::string{}) + "," +
         (e ? e->abbreviation : std::string{}) + "," + r.unit + "," + format_double(r.lower) + "," +
         format_double(r.upper);
}

inline std::string render(const PhenotypeTriple& t) {
  return to_string(t.entity) + "," + t.below + "," + t.above + "," + t.normal;
}

inline std::string render(const GranularBand& b) {
  return b.primary + "," + b.unit + "," + format_double(b.lower) + "," + format_double(b.upper) +
         "," + b.granular;
}

inline std::string render(const Synonym& s) { return to_string(s.entity) + "," + s.text; }

inline bool is_lower(std::string_view s) { return to_lower(s) == s; }

enum class KbSection { none, entities, ranges, triples, granular, synonyms };

struct SectionSpec {
  std::string_view marker;
  KbSection section;
  std::string_view header;
};

inline constexpr SectionSpec kSections[] = {
    {"#ENTITIES", KbSection::entities, "entity_id,name,abbreviation"},
    {"#RANGES", KbSection::ranges, "entity_id,name,abbreviation,unit,lower,upper"},
    {"#TRIPLES", KbSection::triples, "entity_id,below_hpo,above_hpo,normal_hpo"},
    {"#GRANULAR", KbSection::granular, "primary_hpo,unit,lower,upper,granular_hpo"},
    {"#SYNONYMS", KbSection::synonyms, "entity_id,synonym"},
};

}  // namespace detail

/// Parses KB text without consistency checks. Throws ParseError with the line number.
inline KnowledgeTables parse_kb_tables(std::string_view text) {
  using detail::KbSection;
  KnowledgeTables t;
  KbSection section = KbSection::none;
  std::string_view header;
  bool expect_header = false;
  std::size_t lineno = 0;

  for (auto line : detail::lines(text)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    if (line.front() == '#') {
      // Lines other than section markers are comments.
      const auto marker = detail::trim(line);
      for (const auto& spec : detail::kSections) {
        if (marker == spec.marker) {
          section = spec.section;
          header = spec.header;
          expect_header = true;
        }
      }
      continue;
    }
    if (section == KbSection::none) throw ParseError("row outside of any section", lineno);
    if (expect_header) {
      if (detail::trim(line) != header)
        throw ParseError("expected header '" + std::string(header) + "'", lineno);
      expect_header = false;
      continue;
    }

    const auto cols = detail::split(line, ',');
    const auto want = detail::split(header, ',').size();
    if (cols.size() != want)
      throw ParseError("expected " + std::to_string(want) + " columns, got " +
                           std::to_string(cols.size()),
                       lineno);
    auto field = [&](std::size_t i) { return std::string(detail::trim(cols[i])); };
    auto id = [&](std::size_t i) {
      const auto v = detail::parse_int<std::int32_t>(cols[i]);
      if (!v) throw ParseError("bad entity id '" + field(i) + "'", lineno);
      return EntityId{*v};
    };
    auto number = [&](std::size_t i) {
      const auto v = detail::parse_double(cols[i]);
      if (!v) throw ParseError("bad number '" + field(i) + "'", lineno);
      return *v;
    };

    switch (section) {
      case KbSection::entities:
        t.entities.push_back({id(0), detail::to_lower(field(1)), detail::to_lower(field(2))});
        break;
      case KbSection::ranges: {
        ReferenceRange r{id(0), field(3), number(4), number(5)};
        // Name and abbreviation columns mirror the entity table; checked on validation.
        const auto name = detail::to_lower(field(1));
        const auto abbr = detail::to_lower(field(2));
        const auto it = std::find_if(t.entities.begin(), t.entities.end(),
                                     [&](const auto& e) { return e.id == r.entity; });
        if (it != t.entities.end() && (it->name != name || it->abbreviation != abbr))
          throw ParseError("range row names '" + name + "' but entity " + to_string(r.entity) +
                               " is '" + it->name + "'",
                           lineno);
        t.ranges.push_back(std::move(r));
        break;
      }
      case KbSection::triples:
        t.triples.push_back({id(0), field(1), field(2), field(3)});
        break;
      case KbSection::granular:
        t.bands.push_back({field(0), field(1), number(2), number(3), field(4)});
        break;
      case KbSection::synonyms:
        t.synonyms.push_back({id(0), detail::to_lower(field(1))});
        break;
      case KbSection::none:
        break;
    }
  }
  if (expect_header) throw ParseError("section header row missing", lineno);
  return t;
}

/// Checks every table invariant. Empty result iff the knowledge base is consistent.
inline std::vector<Violation> validate_kb(const KnowledgeBase& kb) {
  const auto& t = kb.tables();
  std::vector<Violation> out;
  auto flag = [&out](std::string rule, std::string row) {
    out.push_back({std::move(rule), std::move(row)});
  };

  if (t.entities.empty()) flag("no entities defined", "");

  std::set<EntityId> ids;
  for (const auto& e : t.entities) {
    if (!ids.insert(e.id).second) flag("duplicate entity id", detail::render(e));
    if (e.name.empty() || e.abbreviation.empty())
      flag("empty name or abbreviation", detail::render(e));
    else if (!detail::is_lower(e.name) || !detail::is_lower(e.abbreviation))
      flag("name not lowercase", detail::render(e));
  }

  std::set<std::pair<EntityId, std::string>> units;
  for (const auto& r : t.ranges) {
    const auto* e = kb.find_entity(r.entity);
    if (!e) {
      flag("unknown entity id", detail::render(r, e));
      continue;
    }
    if (!(r.lower < r.upper)) flag("lower >= upper", detail::render(r, e));
    if (!units.insert({r.entity, r.unit}).second) flag("duplicate unit for entity", detail::render(r, e));
  }

  std::map<EntityId, int> triple_count;
  for (const auto& tr : t.triples) {
    if (!kb.find_entity(tr.entity)) {
      flag("unknown entity id", detail::render(tr));
      continue;
    }
    ++triple_count[tr.entity];
    if (tr.below == tr.above || tr.below == tr.normal || tr.above == tr.normal)
      flag("triple ids not distinct", detail::render(tr));
  }
  for (const auto& e : t.entities) {
    const auto n = triple_count[e.id];
    if (n == 0) flag("missing triple", detail::render(e));
    if (n > 1) flag("duplicate triple", detail::render(e));
  }

  for (const auto& b : t.bands) {
    const auto row = detail::render(b);
    if (!(b.lower < b.upper)) {
      flag("lower >= upper", row);
      continue;
    }
    const PhenotypeTriple* owner = nullptr;
    bool above = false;
    for (const auto& tr : t.triples) {
      if (tr.below == b.primary || tr.above == b.primary) {
        owner = &tr;
        above = tr.above == b.primary;
        break;
      }
    }
    if (!owner) {
      flag("band primary is not an affirmed phenotype", row);
      continue;
    }
    const auto range = kb.range(owner->entity, b.unit);
    if (!range) {
      flag("band unit has no range", row);
      continue;
    }
    if (!(range->lower < range->upper)) continue;  // already reported on the range
    const bool on_side = above ? b.lower > range->upper : b.upper < range->lower;
    const bool wrong_side = above ? b.upper < range->lower : b.lower > range->upper;
    if (wrong_side)
      flag("band on wrong side of normal range", row);
    else if (!on_side)
      flag("band straddles normal range", row);
  }

  for (const auto& s : t.synonyms) {
    if (!kb.find_entity(s.entity))
      flag("unknown entity id", detail::render(s));
    else if (s.text.empty())
      flag("empty synonym", detail::render(s));
  }
  return out;
}

inline std::string describe(const std::vector<Violation>& vs) {
  std::string msg;
  for (const auto& v : vs) {
    if (!msg.empty()) msg += "; ";
    msg += v.rule;
    if (!v.row.empty()) msg += " [" + v.row + "]";
  }
  return msg;
}

/// Parses and validates. Throws ParseError or ValidationError.
inline KnowledgeBase parse_kb(std::string_view text) {
  KnowledgeBase kb(parse_kb_tables(text));
  if (const auto vs = validate_kb(kb); !vs.empty()) throw ValidationError(describe(vs));
  return kb;
}

inline KnowledgeBase load_kb(const std::string& path) { return parse_kb(detail::read_file(path)); }

/// Serializes in the KB file format. Synonym rows exclude names and abbreviations.
inline std::string store_kb(const KnowledgeBase& kb) {
  const auto& t = kb.tables();
  std::string out;
  auto section = [&out](std::string_view marker) {
    for (const auto& spec : detail::kSections)
      if (spec.marker == marker) {
        out += std::string(marker) + "\n" + std::string(spec.header) + "\n";
      }
  };
  section("#ENTITIES");
  for (const auto& e : t.entities) out += detail::render(e) + "\n";
  section("#RANGES");
  for (const auto& r : t.ranges) out += detail::render(r, kb.find_entity(r.entity)) + "\n";
  section("#TRIPLES");
  for (const auto& tr : t.triples) out += detail::render(tr) + "\n";
  section("#GRANULAR");
  for (const auto& b : t.bands) out += detail::render(b) + "\n";
  section("#SYNONYMS");
  for (const auto& s : t.synonyms) out += detail::render(s) + "\n";
  return out;
}

inline void save_kb(const KnowledgeBase& kb, const std::string& path) {
  detail::write_file(path, store_kb(kb));
}

}  // namespace nr

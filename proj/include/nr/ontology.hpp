#pragma once

// Minimal HPO reader. Accepts either OBO stanzas
//
//   [Term]
//   id: HP:0001945
//   name: Fever
//   is_a: HP:0004370 ! Abnormality of temperature regulation
//
// or a TSV edge list `child<TAB>parent<TAB>child_name` (parent may be empty).

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nr/detail/text.hpp"
#include "nr/error.hpp"
#include "nr/knowledge.hpp"

namespace nr {

inline constexpr std::string_view kPhenotypicAbnormality = "HP:0000118";

inline bool is_hpo_id(std::string_view s) {
  if (s.size() != 10 || s.substr(0, 3) != "HP:") return false;
  return std::all_of(s.begin() + 3, s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

struct HpoTerm {
  HpoId id;
  std::string name;
  std::vector<HpoId> parents;
};

/// Immutable term graph with memoized ancestor closure. Safe for concurrent readers.
class Ontology {
 public:
  using IdSet = std::set<HpoId>;

  Ontology() : cache_(std::make_unique<Cache>()) {}

  /// Throws ParseError on dangling parents or cycles.
  explicit Ontology(std::map<HpoId, HpoTerm> terms)
      : terms_(std::move(terms)), cache_(std::make_unique<Cache>()) {
    for (const auto& [id, term] : terms_)
      for (const auto& p : term.parents)
        if (!terms_.count(p)) throw ParseError("dangling parent " + p + " of " + id);
    check_acyclic();
    compute_scope();
  }

  Ontology(Ontology&&) noexcept = default;
  Ontology& operator=(Ontology&&) noexcept = default;

  bool contains(std::string_view id) const { return terms_.count(HpoId(id)) > 0; }
  std::size_t size() const { return terms_.size(); }
  const std::map<HpoId, HpoTerm>& terms() const { return terms_; }

  const HpoTerm& term(std::string_view id) const {
    const auto it = terms_.find(HpoId(id));
    if (it == terms_.end()) throw ValidationError("unknown HPO id " + std::string(id));
    return it->second;
  }

  /// Transitive ancestors restricted to the phenotypic-abnormality subtree:
  /// the root itself, anything above or beside it, and `id` are excluded.
  const IdSet& ancestors(std::string_view id) const {
    const HpoId key(id);
    if (!terms_.count(key)) throw ValidationError("unknown HPO id " + key);
    {
      std::shared_lock lock(cache_->mutex);
      if (const auto it = cache_->closure.find(key); it != cache_->closure.end()) return it->second;
    }
    IdSet result;
    std::vector<HpoId> stack(terms_.at(key).parents);
    std::set<HpoId> seen;
    while (!stack.empty()) {
      auto cur = std::move(stack.back());
      stack.pop_back();
      if (!seen.insert(cur).second) continue;
      if (!in_scope_.count(cur)) continue;  // leaving the subtree truncates this path
      result.insert(cur);
      for (const auto& p : terms_.at(cur).parents) stack.push_back(p);
    }
    std::unique_lock lock(cache_->mutex);
    return cache_->closure.try_emplace(key, std::move(result)).first->second;
  }

 private:
  struct Cache {
    std::shared_mutex mutex;
    std::unordered_map<HpoId, IdSet> closure;
  };

  void check_acyclic() const {
    enum class Mark { fresh, active, done };
    std::map<HpoId, Mark> mark;
    std::vector<HpoId> path;
    // Iterative DFS; each frame is (term, next parent index).
    for (const auto& [start, unused] : terms_) {
      if (mark[start] != Mark::fresh) continue;
      std::vector<std::pair<HpoId, std::size_t>> frames{{start, 0}};
      mark[start] = Mark::active;
      path = {start};
      while (!frames.empty()) {
        auto& [id, next] = frames.back();
        const auto& parents = terms_.at(id).parents;
        if (next == parents.size()) {
          mark[id] = Mark::done;
          frames.pop_back();
          path.pop_back();
          continue;
        }
        const HpoId p = parents[next++];
        if (mark[p] == Mark::active) {
          std::string cycle;
          const auto from = std::find(path.begin(), path.end(), p);
          for (auto it = from; it != path.end(); ++it) cycle += *it + " -> ";
          throw ParseError("cycle detected: " + cycle + p);
        }
        if (mark[p] == Mark::fresh) {
          mark[p] = Mark::active;
          frames.emplace_back(p, 0);
          path.push_back(p);
        }
      }
    }
  }

  // Terms with a parent path to the root, excluding the root itself. Without a
  // root term every term is in scope.
  void compute_scope() {
    const HpoId root(kPhenotypicAbnormality);
    if (!terms_.count(root)) {
      for (const auto& [id, t] : terms_) in_scope_.insert(id);
      return;
    }
    std::map<HpoId, std::vector<HpoId>> children;
    for (const auto& [id, t] : terms_)
      for (const auto& p : t.parents) children[p].push_back(id);
    std::vector<HpoId> stack{root};
    while (!stack.empty()) {
      const auto cur = stack.back();
      stack.pop_back();
      for (const auto& c : children[cur])
        if (in_scope_.insert(c).second) stack.push_back(c);
    }
  }

  std::map<HpoId, HpoTerm> terms_;
  std::set<HpoId> in_scope_;
  std::unique_ptr<Cache> cache_;
};

namespace detail {

inline std::map<HpoId, HpoTerm> parse_obo_terms(std::string_view text) {
  std::map<HpoId, HpoTerm> terms;
  HpoTerm cur;
  bool in_term = false;
  std::size_t lineno = 0;
  std::size_t stanza_line = 0;
  auto flush = [&]() {
    if (!in_term) return;
    if (cur.id.empty()) throw ParseError("[Term] stanza without id", stanza_line);
    if (!is_hpo_id(cur.id)) throw ParseError("malformed HPO id '" + cur.id + "'", stanza_line);
    if (terms.count(cur.id)) throw ParseError("duplicate term " + cur.id, stanza_line);
    terms.emplace(cur.id, std::move(cur));
    cur = {};
  };
  for (auto raw : lines(text)) {
    ++lineno;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '!') continue;
    if (line.front() == '[') {
      flush();
      in_term = line == "[Term]";
      stanza_line = lineno;
      continue;
    }
    if (!in_term) continue;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    const auto tag = trim(line.substr(0, colon));
    auto value = trim(line.substr(colon + 1));
    if (const auto bang = value.find(" !"); bang != std::string_view::npos)
      value = trim(value.substr(0, bang));
    if (tag == "id") {
      cur.id = std::string(value);
    } else if (tag == "name") {
      cur.name = std::string(value);
    } else if (tag == "is_a") {
      if (!is_hpo_id(value)) throw ParseError("malformed is_a target '" + std::string(value) + "'", lineno);
      cur.parents.emplace_back(value);
    }
  }
  flush();
  return terms;
}

inline std::map<HpoId, HpoTerm> parse_tsv_terms(std::string_view text) {
  std::map<HpoId, HpoTerm> terms;
  std::size_t lineno = 0;
  for (auto raw : lines(text)) {
    ++lineno;
    if (trim(raw).empty() || raw.front() == '#') continue;
    const auto cols = split(raw, '\t');
    if (cols.size() != 3) throw ParseError("expected 3 tab-separated columns", lineno);
    const auto child = std::string(trim(cols[0]));
    const auto parent = std::string(trim(cols[1]));
    if (!is_hpo_id(child)) throw ParseError("malformed HPO id '" + child + "'", lineno);
    if (!parent.empty() && !is_hpo_id(parent))
      throw ParseError("malformed HPO id '" + parent + "'", lineno);
    auto& term = terms[child];
    term.id = child;
    if (const auto name = trim(cols[2]); !name.empty()) term.name = std::string(name);
    if (!parent.empty() && std::find(term.parents.begin(), term.parents.end(), parent) == term.parents.end())
      term.parents.push_back(parent);
  }
  return terms;
}

}  // namespace detail

/// Detects the format: any `[Term]` or `format-version:` line selects OBO.
inline Ontology parse_ontology_text(std::string_view text) {
  bool obo = false;
  for (auto l : detail::lines(text)) {
    const auto t = detail::trim(l);
    if (t == "[Term]" || t.rfind("format-version:", 0) == 0) {
      obo = true;
      break;
    }
  }
  return Ontology(obo ? detail::parse_obo_terms(text) : detail::parse_tsv_terms(text));
}

inline Ontology parse_ontology(const std::string& path) {
  return parse_ontology_text(detail::read_file(path));
}

}  // namespace nr

#pragma once

// Maps (entity, value, unit) to an HPO concept through the reference ranges.

#include <array>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nr/detail/text.hpp"
#include "nr/knowledge.hpp"

namespace nr {

enum class Polarity { affirmed, negated };

inline std::string_view to_string(Polarity p) { return p == Polarity::affirmed ? "affirmed" : "negated"; }

inline std::optional<Polarity> parse_polarity(std::string_view s) {
  if (s == "affirmed") return Polarity::affirmed;
  if (s == "negated") return Polarity::negated;
  return std::nullopt;
}

/// Canonical unit label for a textual hint, or nullopt when the hint is not a unit.
inline std::optional<std::string> canonical_unit(std::string_view hint) {
  static const std::array<std::pair<std::string_view, std::string_view>, 11> aliases = {{
      {"f", "fahrenheit"},
      {"°f", "fahrenheit"},
      {"degf", "fahrenheit"},
      {"fahrenheit", "fahrenheit"},
      {"c", "celsius"},
      {"°c", "celsius"},
      {"degc", "celsius"},
      {"celsius", "celsius"},
      {"%", "%"},
      {"pct", "%"},
      {"bpm", "bpm"},
  }};
  const auto lower = detail::to_lower(hint);
  for (const auto& [alias, unit] : aliases)
    if (alias == lower) return std::string(unit);
  return std::nullopt;
}

/// Out-of-range ratio of a value against one range: value/upper above it,
/// lower/value below it, exactly 1 inside. Throws when the denominator is not positive.
inline double unit_ratio(double value, const ReferenceRange& r) {
  if (r.contains(value)) return 1.0;
  const double denom = value > r.upper ? r.upper : value;
  if (!(denom > 0)) throw NumericError("unit ratio undefined for value " + detail::format_double(value));
  return value > r.upper ? value / r.upper : r.lower / value;
}

/// Unit to interpret `value` in. An explicit hint naming one of the ranges'
/// units wins; with a single range that range's unit is used; otherwise the
/// unit with the smallest unit_ratio, earlier declaration on ties.
inline std::string infer_unit(double value, const std::vector<ReferenceRange>& ranges,
                              const std::optional<std::string>& unit_hint = std::nullopt) {
  if (ranges.empty()) throw ValidationError("infer_unit needs at least one reference range");
  if (unit_hint)
    if (const auto unit = canonical_unit(*unit_hint))
      for (const auto& r : ranges)
        if (r.unit == *unit) return r.unit;
  if (ranges.size() == 1) return ranges.front().unit;
  std::size_t best = 0;
  double best_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < ranges.size(); ++i) {
    const double ratio = unit_ratio(value, ranges[i]);
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = i;
    }
  }
  return ranges[best].unit;
}

struct Assignment {
  HpoId hpo;
  Polarity polarity = Polarity::affirmed;
};

/// Below the range affirms the triple's below concept, above affirms the
/// above concept, inside (bounds inclusive) negates the normal concept. An
/// affirmed concept is replaced by a granular band's concept when a band for
/// it in the same unit contains the value.
inline Assignment assign_hpo(EntityId entity, double value, std::string_view unit, const KnowledgeBase& kb) {
  const auto range = kb.range(entity, unit);
  if (!range)
    throw ValidationError("no reference range for entity " + to_string(entity) + " in unit '" +
                          std::string(unit) + "'");
  const auto& triple = kb.triple(entity);
  if (range->contains(value)) return {triple.normal, Polarity::negated};
  Assignment a{value < range->lower ? triple.below : triple.above, Polarity::affirmed};
  for (const auto& band : kb.bands())
    if (band.primary == a.hpo && band.unit == unit && band.contains(value)) {
      a.hpo = band.granular;
      break;
    }
  return a;
}

}  // namespace nr

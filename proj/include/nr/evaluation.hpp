#pragma once

// Document-level micro-averaged precision, recall and F1, on literal HPO ids
// (exact) or on ancestor-closed label sets (generalized).

#include <cstddef>
#include <set>
#include <string>
#include <tuple>

#include "nr/assignment.hpp"
#include "nr/ontology.hpp"

namespace nr {

struct Label {
  std::string doc_id;
  HpoId hpo;
  Polarity polarity = Polarity::affirmed;

  auto operator<=>(const Label&) const = default;
};

using LabeledSet = std::set<Label>;

struct Metrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalOptions {
  bool ignore_polarity = false;
};

inline Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Metrics m{0, 0, 0, tp, fp, fn};
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision + m.recall > 0) m.f1 = 2 * m.precision * m.recall / (m.precision + m.recall);
  return m;
}

namespace detail {

inline LabeledSet strip_polarity(const LabeledSet& s) {
  LabeledSet out;
  for (auto l : s) {
    l.polarity = Polarity::affirmed;
    out.insert(std::move(l));
  }
  return out;
}

}  // namespace detail

inline Metrics evaluate_exact(const LabeledSet& gold, const LabeledSet& pred, EvalOptions opts = {}) {
  if (opts.ignore_polarity) return evaluate_exact(detail::strip_polarity(gold), detail::strip_polarity(pred));
  std::size_t tp = 0;
  for (const auto& l : pred)
    if (gold.count(l)) ++tp;
  return metrics_from_counts(tp, pred.size() - tp, gold.size() - tp);
}

/// Adds every in-scope ancestor of each label, carrying doc and polarity.
/// Throws ValidationError naming any HPO id the ontology lacks.
inline LabeledSet closure(const LabeledSet& set, const Ontology& ontology) {
  LabeledSet out = set;
  for (const auto& l : set)
    for (const auto& a : ontology.ancestors(l.hpo)) out.insert({l.doc_id, a, l.polarity});
  return out;
}

inline Metrics evaluate_generalized(const LabeledSet& gold, const LabeledSet& pred, const Ontology& ontology,
                                    EvalOptions opts = {}) {
  return evaluate_exact(closure(gold, ontology), closure(pred, ontology), opts);
}

}  // namespace nr

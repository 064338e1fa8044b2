#pragma once

#include <optional>
#include <vector>

#include "nr/extraction.hpp"
#include "nr/knowledge.hpp"
#include "nr/training.hpp"

namespace nr {

inline constexpr double kDefaultThreshold = 0.9;

struct LinkResult {
  NumberMention number;
  EntityId entity{};
  Candidate candidate;
  double score = 0;
};

/// Best (candidate, entity) pair by cosine over the Cartesian product, kept
/// only when its score reaches `threshold`. Ties go to the lower entity id,
/// then the lower candidate token index.
template <typename Real>
std::optional<LinkResult> link(const CandidateSet& set, const EntityEmbeddings& entities,
                               const BasicLexicon<Real>& lexicon, double threshold = kDefaultThreshold) {
  if (entities.empty()) throw ValidationError("link needs at least one entity embedding");
  std::optional<LinkResult> best;
  for (const auto& cand : set.candidates) {
    const auto v = embed_phrase(lexicon, cand.phrase);
    if (norm(v) == 0.0) continue;
    for (std::size_t i = 0; i < entities.size(); ++i) {
      const double score = cosine(v, entities.vectors[i]);
      const auto id = entities.ids[i];
      const bool better =
          !best || score > best->score ||
          (score == best->score &&
           (to_int(id) < to_int(best->entity) ||
            (id == best->entity && cand.head_token_index < best->candidate.head_token_index)));
      if (better) best = LinkResult{set.number, id, cand, score};
    }
  }
  if (best && best->score >= threshold) return best;
  return std::nullopt;
}

template <typename Real>
std::vector<LinkResult> link_all(std::span<const CandidateSet> sets, const EntityEmbeddings& entities,
                                 const BasicLexicon<Real>& lexicon, double threshold = kDefaultThreshold) {
  std::vector<LinkResult> out;
  for (const auto& s : sets)
    if (auto r = link(s, entities, lexicon, threshold)) out.push_back(std::move(*r));
  return out;
}

/// Keyword baseline: exact lowercase match of a candidate phrase against entity
/// names, abbreviations and listed synonyms. The first matching candidate wins.
inline std::optional<LinkResult> shallow_link(const CandidateSet& set, const KnowledgeBase& kb) {
  for (const auto& cand : set.candidates)
    for (const auto& e : kb.entities())
      for (const auto& s : kb.synonyms(e.id))
        if (s == cand.phrase) return LinkResult{set.number, e.id, cand, 1.0};
  return std::nullopt;
}

}  // namespace nr

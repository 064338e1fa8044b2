#pragma once

// Cosine-vs-label objective over a token table:
//
//   L = 1/N * sum over pairs (cos(h_entity, h_phrase) - y)^2
//
// where h is the mean-pooled phrase vector and N the number of pairs. Over the
// full entity x synonym grid N = |E||S|.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nr/embedding.hpp"
#include "nr/knowledge.hpp"

namespace nr {

struct TrainingPair {
  EntityId entity{};
  std::string entity_phrase;
  std::string phrase;
  int label = 0;  // 1 iff phrase is a synonym of entity
};

struct SynonymEntry {
  EntityId entity{};
  std::string name;
  std::vector<std::string> synonyms;  // includes name and abbreviation
};

using SynonymTable = std::vector<SynonymEntry>;

inline SynonymTable synonym_table(const KnowledgeBase& kb) {
  SynonymTable out;
  for (const auto& e : kb.entities()) out.push_back({e.id, e.name, kb.synonyms(e.id)});
  return out;
}

/// Reads the #ENTITIES and #SYNONYMS sections of a KB-format file; other
/// sections are parsed but not required.
inline SynonymTable load_synonym_table(const std::string& path) {
  KnowledgeTables t = parse_kb_tables(detail::read_file(path));
  t.ranges.clear();
  t.triples.clear();
  t.bands.clear();
  const KnowledgeBase kb(std::move(t));
  for (const auto& v : validate_kb(kb))
    if (v.rule != "missing triple") throw ValidationError(v.rule + " [" + v.row + "]");
  return synonym_table(kb);
}

struct TrainConfig {
  std::size_t dim = 16;
  int epochs = 200;
  double learning_rate = 2.0;
  std::size_t batch_size = 16;
  std::uint64_t seed = 7;
  std::size_t negative_ratio = 4;
  std::size_t full_grid_limit = 10000;  // |E|*|S| at or below this trains on every pair
};

using Gradient = std::map<std::string, Vector>;

namespace detail {

struct PooledPhrase {
  std::vector<std::string> keys;
  Vector mean;
};

template <typename Real>
PooledPhrase pool(const BasicLexicon<Real>& lexicon, const std::string& phrase) {
  PooledPhrase p{phrase_keys(lexicon, phrase), Vector(lexicon.dim(), 0.0)};
  if (p.keys.empty()) throw ValidationError("cannot embed an empty phrase");
  for (const auto& k : p.keys) {
    const auto v = key_vector(lexicon, k);
    for (std::size_t i = 0; i < v.size(); ++i) p.mean[i] += v[i];
  }
  for (auto& x : p.mean) x /= static_cast<double>(p.keys.size());
  return p;
}

inline double checked_norm(const Vector& v, const std::string& phrase) {
  const double n = norm(v);
  if (n == 0.0) throw NumericError("zero-norm embedding for '" + phrase + "'; cosine undefined");
  return n;
}

}  // namespace detail

template <typename Real>
double sts_loss(std::span<const TrainingPair> pairs, const BasicLexicon<Real>& lexicon) {
  if (pairs.empty()) throw ValidationError("sts_loss needs at least one pair");
  double total = 0;
  for (const auto& p : pairs) {
    const auto a = detail::pool(lexicon, p.entity_phrase);
    const auto b = detail::pool(lexicon, p.phrase);
    const double c = dot(a.mean, b.mean) / (detail::checked_norm(a.mean, p.entity_phrase) *
                                            detail::checked_norm(b.mean, p.phrase));
    total += (c - p.label) * (c - p.label);
  }
  return total / static_cast<double>(pairs.size());
}

/// Analytic gradient of sts_loss with respect to every table row the pairs
/// touch. Tokens missing from the table are constants and get no entry.
template <typename Real>
Gradient sts_gradient(std::span<const TrainingPair> pairs, const BasicLexicon<Real>& lexicon) {
  if (pairs.empty()) throw ValidationError("sts_gradient needs at least one pair");
  Gradient grad;
  const double scale = 1.0 / static_cast<double>(pairs.size());
  auto accumulate = [&](const detail::PooledPhrase& p, const Vector& d) {
    const double share = 1.0 / static_cast<double>(p.keys.size());
    for (const auto& k : p.keys) {
      if (!lexicon.find(k)) continue;
      auto& g = grad.try_emplace(k, Vector(lexicon.dim(), 0.0)).first->second;
      for (std::size_t i = 0; i < d.size(); ++i) g[i] += share * d[i];
    }
  };
  for (const auto& p : pairs) {
    const auto a = detail::pool(lexicon, p.entity_phrase);
    const auto b = detail::pool(lexicon, p.phrase);
    const double na = detail::checked_norm(a.mean, p.entity_phrase);
    const double nb = detail::checked_norm(b.mean, p.phrase);
    const double c = dot(a.mean, b.mean) / (na * nb);
    const double outer = scale * 2.0 * (c - p.label);
    // d cos / d a = b/(|a||b|) - cos * a/|a|^2, symmetric for b.
    Vector da(a.mean.size()), db(a.mean.size());
    for (std::size_t i = 0; i < da.size(); ++i) {
      da[i] = outer * (b.mean[i] / (na * nb) - c * a.mean[i] / (na * na));
      db[i] = outer * (a.mean[i] / (na * nb) - c * b.mean[i] / (nb * nb));
    }
    accumulate(a, da);
    accumulate(b, db);
  }
  return grad;
}

namespace detail {

// Fisher-Yates over raw engine output; independent of std::shuffle's algorithm.
template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

}  // namespace detail

/// Entity x synonym grid, or every positive plus `negative_ratio` sampled
/// cross-entity negatives per positive when the grid exceeds the limit.
inline std::vector<TrainingPair> build_training_pairs(const SynonymTable& table, const TrainConfig& config) {
  std::vector<std::string> phrases;
  std::set<std::string> seen;
  for (const auto& e : table)
    for (const auto& s : e.synonyms)
      if (seen.insert(s).second) phrases.push_back(s);

  auto is_synonym = [](const SynonymEntry& e, const std::string& s) {
    return std::find(e.synonyms.begin(), e.synonyms.end(), s) != e.synonyms.end();
  };

  std::vector<TrainingPair> pairs;
  if (table.size() * phrases.size() <= config.full_grid_limit) {
    for (const auto& e : table)
      for (const auto& s : phrases) pairs.push_back({e.entity, e.name, s, is_synonym(e, s) ? 1 : 0});
    return pairs;
  }

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  for (std::size_t ei = 0; ei < table.size(); ++ei) {
    const auto& e = table[ei];
    for (const auto& s : e.synonyms) {
      pairs.push_back({e.entity, e.name, s, 1});
      for (std::size_t n = 0; n < config.negative_ratio && table.size() > 1; ++n) {
        std::size_t other = rng() % (table.size() - 1);
        if (other >= ei) ++other;
        const auto& o = table[other];
        pairs.push_back({o.entity, o.name, s, is_synonym(o, s) ? 1 : 0});
      }
    }
  }
  return pairs;
}

struct TrainResult {
  Lexicon lexicon;
  double initial_loss = 0;
  std::vector<double> epoch_losses;
};

/// Mini-batch gradient descent on the token table. Bit-reproducible for a
/// given (table, config). Throws NumericError if the loss stops being finite.
inline TrainResult train_lexicon(const SynonymTable& table, const TrainConfig& config,
                                 const std::function<void(int, double)>& on_epoch = {}) {
  if (config.dim == 0 || config.epochs <= 0 || config.batch_size == 0 || config.negative_ratio == 0 ||
      !(config.learning_rate > 0))
    throw ValidationError("training configuration values must be positive");
  std::size_t with_synonyms = 0;
  for (const auto& e : table)
    if (!e.synonyms.empty()) ++with_synonyms;
  if (table.size() < 2 || with_synonyms != table.size())
    throw ValidationError("training needs at least 2 entities with at least 1 synonym each");

  const auto pairs = build_training_pairs(table, config);

  std::set<std::string> vocabulary;
  for (const auto& e : table) {
    for (const auto& w : detail::split_words(e.name)) vocabulary.insert(w);
    for (const auto& s : e.synonyms)
      for (const auto& w : detail::split_words(s)) vocabulary.insert(w);
  }

  detail::NormalSource init(config.seed);
  BasicLexicon<double> params(config.dim);
  for (const auto& w : vocabulary) params.insert(w, detail::random_unit_vector(init, config.dim));

  TrainResult result;
  result.initial_loss = sts_loss<double>(pairs, params);
  if (on_epoch) on_epoch(0, result.initial_loss);

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(pairs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<TrainingPair> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    detail::shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        batch.push_back(pairs[order[i]]);
      for (const auto& [key, g] : sts_gradient<double>(batch, params)) {
        auto& row = *params.find_mutable(key);
        for (std::size_t i = 0; i < row.size(); ++i) row[i] -= config.learning_rate * g[i];
      }
    }
    const double loss = sts_loss<double>(pairs, params);
    if (!std::isfinite(loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch + 1) +
                         "; try a smaller learning rate");
    result.epoch_losses.push_back(loss);
    if (on_epoch) on_epoch(epoch + 1, loss);
  }

  Lexicon out(config.dim);
  for (const auto& [key, row] : params.table()) {
    Lexicon::Row f(row.size());
    std::transform(row.begin(), row.end(), f.begin(), [](double v) { return static_cast<float>(v); });
    out.insert(key, std::move(f));
  }
  result.lexicon = std::move(out);
  return result;
}

/// Reference vectors of every entity name, in declaration order.
struct EntityEmbeddings {
  std::vector<EntityId> ids;
  std::vector<Vector> vectors;

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
};

template <typename Real>
EntityEmbeddings reference_embeddings(const BasicLexicon<Real>& lexicon, const KnowledgeBase& kb) {
  EntityEmbeddings out;
  for (const auto& e : kb.entities()) {
    out.ids.push_back(e.id);
    out.vectors.push_back(embed_phrase(lexicon, e.name));
  }
  return out;
}

template <typename Real>
EntityEmbeddings reference_embeddings(const BasicLexicon<Real>& lexicon, const SynonymTable& table) {
  EntityEmbeddings out;
  for (const auto& e : table) {
    out.ids.push_back(e.entity);
    out.vectors.push_back(embed_phrase(lexicon, e.name));
  }
  return out;
}

struct RankedEntity {
  EntityId entity{};
  double score = 0;
};

/// All entities by decreasing cosine with the phrase; ties by lower id.
template <typename Real>
std::vector<RankedEntity> rank_entities(const BasicLexicon<Real>& lexicon, const EntityEmbeddings& refs,
                                        std::string_view phrase) {
  const auto v = embed_phrase(lexicon, phrase);
  std::vector<RankedEntity> out;
  for (std::size_t i = 0; i < refs.size(); ++i) out.push_back({refs.ids[i], cosine(v, refs.vectors[i])});
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return to_int(a.entity) < to_int(b.entity);
  });
  return out;
}

/// Fraction of (entity, synonym) memberships whose nearest entity is the owner.
template <typename Real>
double nearest_entity_accuracy(const BasicLexicon<Real>& lexicon, const SynonymTable& table) {
  const auto refs = reference_embeddings(lexicon, table);
  std::size_t total = 0, hit = 0;
  for (const auto& e : table)
    for (const auto& s : e.synonyms) {
      ++total;
      if (rank_entities(lexicon, refs, s).front().entity == e.entity) ++hit;
    }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

}  // namespace nr

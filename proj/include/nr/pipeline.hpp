#pragma once

// End-to-end annotation: numbers -> candidates -> entity link -> unit -> HPO.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "nr/assignment.hpp"
#include "nr/conllu.hpp"
#include "nr/evaluation.hpp"
#include "nr/extraction.hpp"
#include "nr/linking.hpp"
#include "nr/ontology.hpp"

namespace nr {

enum class LinkerMode { embedding, shallow };

struct Annotation {
  std::string doc_id;
  int sentence = 0;  // 0-based index within the document
  std::size_t start = 0;  // byte offsets into the sentence text, end exclusive
  std::size_t end = 0;
  HpoId hpo;
  std::string hpo_name;
  Polarity polarity = Polarity::affirmed;
  EntityId entity{};
  double value = 0;
  std::string unit;
  double score = 0;
  int token_index = 0;
  int component = 0;
};

/// Everything annotation reads. Build once, share across threads.
struct Resources {
  KnowledgeBase kb;
  Ontology ontology;
  Lexicon lexicon;
  EntityEmbeddings entity_embeddings;
  ExclusionDict exclusions = default_exclusions();

  Resources(KnowledgeBase k, Ontology o, Lexicon l, ExclusionDict ex = default_exclusions())
      : kb(std::move(k)), ontology(std::move(o)), lexicon(std::move(l)), exclusions(std::move(ex)) {
    entity_embeddings = reference_embeddings(lexicon, kb);
    std::vector<std::string> missing;
    auto need = [&](const HpoId& id) {
      if (!ontology.contains(id) && std::find(missing.begin(), missing.end(), id) == missing.end())
        missing.push_back(id);
    };
    for (const auto& t : kb.tables().triples) {
      need(t.below);
      need(t.above);
      need(t.normal);
    }
    for (const auto& b : kb.bands()) need(b.granular);
    if (!missing.empty()) {
      std::string msg = "knowledge base HPO ids absent from ontology:";
      for (const auto& m : missing) msg += " " + m;
      throw ValidationError(msg);
    }
  }
};

struct AnnotateOptions {
  double threshold = kDefaultThreshold;
  LinkerMode linker = LinkerMode::embedding;
  bool suppress_negated = false;
};

struct AnnotateStats {
  std::size_t documents = 0;
  std::size_t numbers = 0;
  std::size_t linked = 0;
  std::size_t annotated = 0;

  AnnotateStats& operator+=(const AnnotateStats& o) {
    documents += o.documents;
    numbers += o.numbers;
    linked += o.linked;
    annotated += o.annotated;
    return *this;
  }
};

/// Annotations of one document sorted by (sentence, token, slash component).
/// Numbers whose candidates link to no entity, or whose unit cannot be
/// inferred, produce nothing.
inline std::vector<Annotation> annotate_document(const Document& doc, const Resources& res,
                                                 const AnnotateOptions& opts = {},
                                                 AnnotateStats* stats = nullptr) {
  std::vector<Annotation> out;
  AnnotateStats local;
  local.documents = 1;
  for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
    const auto& sentence = doc.sentences[si];
    for (const auto& number : extract_numbers(sentence, res.exclusions)) {
      ++local.numbers;
      const auto candidates = extract_candidates(sentence, number);
      const auto linked = opts.linker == LinkerMode::embedding
                              ? link(candidates, res.entity_embeddings, res.lexicon, opts.threshold)
                              : shallow_link(candidates, res.kb);
      if (!linked) continue;
      ++local.linked;

      const auto ranges = res.kb.ranges(linked->entity);
      if (ranges.empty()) continue;
      std::string unit;
      try {
        unit = infer_unit(number.value, ranges, number.unit_hint);
      } catch (const NumericError&) {
        continue;  // no unit makes sense of the value (e.g. 0 against positive ranges)
      }
      const auto assigned = assign_hpo(linked->entity, number.value, unit, res.kb);
      if (opts.suppress_negated && assigned.polarity == Polarity::negated) continue;

      const auto& num_tok = sentence.token(number.token_index);
      const auto& first_tok = sentence.token(linked->candidate.first_token_index);
      const auto& head_tok = sentence.token(linked->candidate.head_token_index);
      Annotation a;
      a.doc_id = doc.doc_id;
      a.sentence = static_cast<int>(si);
      a.start = std::min(first_tok.start, num_tok.start);
      a.end = std::max(head_tok.end, num_tok.end);
      a.hpo = assigned.hpo;
      a.hpo_name = res.ontology.term(assigned.hpo).name;
      a.polarity = assigned.polarity;
      a.entity = linked->entity;
      a.value = number.value;
      a.unit = unit;
      a.score = linked->score;
      a.token_index = number.token_index;
      a.component = number.component.value_or(0);
      out.push_back(std::move(a));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Annotation& x, const Annotation& y) {
    return std::tie(x.sentence, x.token_index, x.component) < std::tie(y.sentence, y.token_index, y.component);
  });
  local.annotated = out.size();
  if (stats) *stats += local;
  return out;
}

/// Annotates documents on up to `jobs` threads. Output order follows input order.
inline std::vector<Annotation> annotate_corpus(const std::vector<Document>& docs, const Resources& res,
                                               const AnnotateOptions& opts = {}, unsigned jobs = 1,
                                               AnnotateStats* stats = nullptr) {
  std::vector<std::vector<Annotation>> per_doc(docs.size());
  std::vector<AnnotateStats> per_stats(docs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&]() {
    for (std::size_t i = next++; i < docs.size(); i = next++) {
      try {
        per_doc[i] = annotate_document(docs[i], res, opts, &per_stats[i]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(docs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Annotation> out;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (stats) *stats += per_stats[i];
    for (auto& a : per_doc[i]) out.push_back(std::move(a));
  }
  return out;
}

inline std::string to_json_line(const Annotation& a) {
  nlohmann::ordered_json j;
  j["doc_id"] = a.doc_id;
  j["sent"] = a.sentence;
  j["start"] = a.start;
  j["end"] = a.end;
  j["hpo_id"] = a.hpo;
  j["hpo_name"] = a.hpo_name;
  j["polarity"] = std::string(to_string(a.polarity));
  j["entity_id"] = to_int(a.entity);
  j["value"] = a.value;
  j["unit"] = a.unit;
  j["score"] = a.score;
  return j.dump();
}

inline std::string to_jsonl(const std::vector<Annotation>& annotations) {
  std::string out;
  for (const auto& a : annotations) out += to_json_line(a) + "\n";
  return out;
}

/// Reads (doc_id, hpo_id, polarity) from JSON lines; polarity defaults to
/// affirmed. Works for gold files and annotation output alike.
inline LabeledSet parse_labels(std::string_view text) {
  LabeledSet out;
  std::size_t lineno = 0;
  for (auto line : detail::lines(text)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("hpo_id") || !j["doc_id"].is_string() ||
        !j["hpo_id"].is_string())
      throw ParseError("expected string fields doc_id and hpo_id", lineno);
    Polarity polarity = Polarity::affirmed;
    if (j.contains("polarity")) {
      const auto p = j["polarity"].is_string() ? parse_polarity(j["polarity"].get<std::string>()) : std::nullopt;
      if (!p) throw ParseError("polarity must be \"affirmed\" or \"negated\"", lineno);
      polarity = *p;
    }
    out.insert({j["doc_id"].get<std::string>(), j["hpo_id"].get<std::string>(), polarity});
  }
  return out;
}

inline LabeledSet labels_of(const std::vector<Annotation>& annotations) {
  LabeledSet out;
  for (const auto& a : annotations) out.insert({a.doc_id, a.hpo, a.polarity});
  return out;
}

}  // namespace nr

// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nr/assignment.hpp"
#include "nr/cli.hpp"
#include "nr/conllu.hpp"
#include "nr/embedding.hpp"
#include "nr/evaluation.hpp"
#include "nr/extraction.hpp"
#include "nr/knowledge.hpp"
#include "nr/ontology.hpp"
#include "nr/pipeline.hpp"
#include "nr/training.hpp"

using namespace nr;

namespace {

// Pinned tolerances and budgets.
constexpr double kRatioTol = 1e-9;
constexpr double kGradStep = 1e-5;
constexpr double kGradTol = 1e-4;
constexpr double kMetricTol = 1e-9;
constexpr double kFastBudgetSec = 1.0;
constexpr double kTrainingBudgetSec = 30.0;
constexpr double kLossReduction = 0.1;

std::string data(const std::string& rel) { return std::string(NR_DATA_DIR) + "/" + rel; }

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

const KnowledgeBase& kb() {
  static const KnowledgeBase k = load_kb(data("sample_kb.csv"));
  return k;
}

const Resources& resources() {
  static const Resources r(kb(), parse_ontology(data("hpo_mini.obo")), load_lexicon(NR_SAMPLE_LEXICON));
  return r;
}

std::vector<Document> corpus(const std::string& name) {
  return parse_conllu(detail::read_file(data("corpus/" + name + ".conllu")));
}

// ---- pyrexia sentence ---------------------------------------------------

Outcome pyrexia() {
  Outcome o;
  const auto docs = corpus("pyrexia");
  const auto& s = docs.at(0).sentences.at(0);
  const auto numbers = extract_numbers(s, resources().exclusions);
  o.require(numbers.size() == 1, "expected one number");
  if (!o.ok) return o;
  std::set<std::string> phrases;
  for (const auto& c : extract_candidates(s, numbers[0]).candidates) phrases.insert(c.phrase);
  o.require(phrases == std::set<std::string>{"pyrexia", "increased", "begun"}, "candidate set differs");

  const auto anns = annotate_document(docs[0], resources());
  o.require(anns.size() == 1, "expected one annotation, got " + std::to_string(anns.size()));
  if (!o.ok) return o;
  const auto& a = anns[0];
  o.require(a.hpo == "HP:0001945" && a.polarity == Polarity::affirmed, "annotation is " + a.hpo);
  const auto span = s.text.substr(a.start, a.end - a.start);
  o.require(span.rfind("pyrexia", 0) == 0 && span.size() >= 4 && span.substr(span.size() - 4) == "102F",
            "span is '" + span + "'");
  o.detail = "span='" + span + "' score=" + std::to_string(a.score);
  return o;
}

// ---- unit inference ------------------------------------------------------

Outcome worked_example_92() {
  Outcome o;
  const auto ranges = kb().ranges(EntityId{0});
  o.require(ranges.size() == 2 && ranges[0].unit == "celsius" && ranges[1].unit == "fahrenheit",
            "temperature ranges not as shipped");
  if (!o.ok) return o;
  const double rc = unit_ratio(92, ranges[0]);
  const double rf = unit_ratio(92, ranges[1]);
  o.require(std::abs(rc - 92 / 37.3) <= kRatioTol, "celsius ratio " + std::to_string(rc));
  o.require(std::abs(rf - 97.5 / 92) <= kRatioTol, "fahrenheit ratio " + std::to_string(rf));
  const auto unit = infer_unit(92, ranges);
  o.require(unit == "fahrenheit", "inferred " + unit);
  const auto a = assign_hpo(EntityId{0}, 92, unit, kb());
  o.require(a.hpo == "HP:0002045" && a.polarity == Polarity::affirmed, "assigned " + a.hpo);
  if (o.ok) {
    std::ostringstream ss;
    ss << "ratios celsius=" << rc << " fahrenheit=" << rf << " -> HP:0002045 affirmed";
    o.detail = ss.str();
  }
  return o;
}

// ---- assignment grid -----------------------------------------------------

// Reads the raw tables with plain comparisons only.
Assignment grid_oracle(const KnowledgeTables& t, EntityId entity, double v, const std::string& unit) {
  const ReferenceRange* range = nullptr;
  for (const auto& r : t.ranges)
    if (r.entity == entity && r.unit == unit) range = &r;
  const PhenotypeTriple* triple = nullptr;
  for (const auto& tr : t.triples)
    if (tr.entity == entity) triple = &tr;
  if (!(v < range->lower) && !(v > range->upper)) return {triple->normal, Polarity::negated};
  const HpoId id = v < range->lower ? triple->below : triple->above;
  for (const auto& b : t.bands)
    if (b.primary == id && b.unit == unit && !(v < b.lower) && !(v > b.upper)) return {b.granular, Polarity::affirmed};
  return {id, Polarity::affirmed};
}

Outcome assignment_grid() {
  Outcome o;
  std::size_t cells = 0, agree = 0;
  for (const auto& e : kb().entities())
    for (const auto& r : kb().ranges(e.id))
      for (const double v : {r.lower - 0.1, r.lower, (r.lower + r.upper) / 2, r.upper, r.upper + 0.1}) {
        const auto got = assign_hpo(e.id, v, r.unit, kb());
        const auto want = grid_oracle(kb().tables(), e.id, v, r.unit);
        ++cells;
        if (got.hpo == want.hpo && got.polarity == want.polarity) ++agree;
      }
  o.require(agree == cells, std::to_string(agree) + "/" + std::to_string(cells) + " cells agree");
  const std::vector<std::tuple<EntityId, double, std::string, HpoId>> granular = {
      {EntityId{0}, 99.5, "fahrenheit", "HP:0011134"},
      {EntityId{6}, 35, "%", "HP:0012665"},
      {EntityId{6}, 25, "%", "HP:0012666"}};
  for (const auto& [entity, v, unit, want] : granular) {
    const auto a = assign_hpo(entity, v, unit, kb());
    std::ostringstream ss;
    ss << v << " " << unit << " -> " << a.hpo << ", expected " << want;
    o.require(a.hpo == want && a.polarity == Polarity::affirmed, ss.str());
  }
  if (o.ok) o.detail = std::to_string(cells) + "/" + std::to_string(cells) + " cells, granular substitutions hold";
  return o;
}

// ---- gradient check ------------------------------------------------------

Gradient central_difference(const std::vector<TrainingPair>& pairs, BasicLexicon<double> lex) {
  Gradient g;
  std::vector<std::string> keys;
  for (const auto& [k, row] : lex.table()) keys.push_back(k);
  for (const auto& k : keys) {
    Vector d(lex.dim());
    for (std::size_t i = 0; i < lex.dim(); ++i) {
      auto& x = (*lex.find_mutable(k))[i];
      const double x0 = x;
      x = x0 + kGradStep;
      const double up = sts_loss<double>(pairs, lex);
      x = x0 - kGradStep;
      const double down = sts_loss<double>(pairs, lex);
      x = x0;
      d[i] = (up - down) / (2 * kGradStep);
    }
    g[k] = d;
  }
  return g;
}

double relative_error(const Gradient& analytic, const Gradient& numeric) {
  double diff = 0, na = 0, nn = 0;
  for (const auto& [k, n] : numeric) {
    const auto it = analytic.find(k);
    for (std::size_t i = 0; i < n.size(); ++i) {
      const double a = it == analytic.end() ? 0.0 : it->second[i];
      diff += (a - n[i]) * (a - n[i]);
      na += a * a;
      nn += n[i] * n[i];
    }
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0 ? std::sqrt(diff) : std::sqrt(diff) / scale;
}

Outcome gradient_check() {
  Outcome o;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal(0, 1);
  double worst = 0;
  for (int point = 0; point < 10; ++point) {
    const std::size_t dim = 2 + point % 7;
    BasicLexicon<double> lex(dim);
    for (const auto* k : {"heart", "rate", "pulse", "temp", "fever"}) {
      Vector v(dim);
      for (auto& x : v) x = normal(rng);
      lex.insert(k, v);
    }
    const std::vector<TrainingPair> pairs = {
        {EntityId{0}, "heart rate", "pulse", 1}, {EntityId{0}, "heart rate", "fever", 0},
        {EntityId{1}, "temp", "fever", 1},       {EntityId{1}, "temp", "heart pulse", 0},
        {EntityId{1}, "temp", "oov token", 0}};
    worst = std::max(worst, relative_error(sts_gradient<double>(pairs, lex), central_difference(pairs, lex)));
  }
  std::ostringstream ss;
  ss << "max relative error " << worst << " over 10 points";
  o.require(worst <= kGradTol, ss.str());
  if (o.ok) o.detail = ss.str();
  return o;
}

// ---- toy training and paraphrase recall ----------------------------------

Outcome toy_training() {
  Outcome o;
  const auto table = load_synonym_table(data("toy_synonyms.csv"));
  std::size_t synonyms = 0;
  for (const auto& e : table) synonyms += e.synonyms.size();
  o.require(table.size() == 3, "toy set has " + std::to_string(table.size()) + " entities");
  TrainConfig cfg;
  cfg.dim = 16;
  cfg.seed = 7;
  cfg.epochs = 200;
  const auto result = train_lexicon(table, cfg);
  const double final_loss = result.epoch_losses.back();
  const double acc = nearest_entity_accuracy(result.lexicon, table);
  std::ostringstream ss;
  ss << "loss " << result.initial_loss << " -> " << final_loss << ", accuracy " << acc << " on " << synonyms
     << " synonyms";
  o.require(final_loss < kLossReduction * result.initial_loss, ss.str());
  o.require(acc == 1.0, ss.str());

  const auto docs = corpus("paraphrase");
  const auto gold = parse_labels(detail::read_file(data("corpus/paraphrase_gold.jsonl")));
  AnnotateOptions shallow;
  shallow.linker = LinkerMode::shallow;
  const auto emb = evaluate_exact(gold, labels_of(annotate_corpus(docs, resources())));
  const auto kw = evaluate_exact(gold, labels_of(annotate_corpus(docs, resources(), shallow)));
  ss << "; paraphrase recall embedding " << emb.recall << " vs shallow " << kw.recall;
  o.require(emb.recall >= kw.recall, ss.str());
  if (o.ok) o.detail = ss.str();
  return o;
}

// ---- evaluation oracle ---------------------------------------------------

std::string hp(int n) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "HP:%07d", n);
  return buf;
}

Outcome evaluation_oracle() {
  Outcome o;
  std::mt19937 rng(2718);
  int matched = 0;
  for (int round = 0; round < 100; ++round) {
    const int n = std::uniform_int_distribution<int>(2, 50)(rng);
    std::vector<HpoId> ids{std::string(kPhenotypicAbnormality)};
    for (int i = 1; i < n; ++i) ids.push_back(hp(2000 + i));
    std::map<HpoId, HpoTerm> terms;
    for (int i = 0; i < n; ++i) {
      HpoTerm t{ids[i], "", {}};
      if (i > 0)
        for (int j = std::uniform_int_distribution<int>(1, 3)(rng); j > 0; --j) {
          const auto& p = ids[std::uniform_int_distribution<int>(0, i - 1)(rng)];
          if (std::find(t.parents.begin(), t.parents.end(), p) == t.parents.end()) t.parents.push_back(p);
        }
      terms.emplace(t.id, t);
    }
    // brute-force ancestors by repeated relaxation
    std::map<HpoId, std::set<HpoId>> reach;
    for (const auto& [id, t] : terms) reach[id] = {t.parents.begin(), t.parents.end()};
    for (int pass = 0; pass < n; ++pass)
      for (auto& [id, r] : reach) {
        auto next = r;
        for (const auto& a : r) next.insert(reach[a].begin(), reach[a].end());
        r = next;
      }
    for (auto& [id, r] : reach) r.erase(std::string(kPhenotypicAbnormality));

    auto random_set = [&] {
      LabeledSet s;
      for (int k = std::uniform_int_distribution<int>(0, 30)(rng); k > 0; --k)
        s.insert({"d" + std::to_string(std::uniform_int_distribution<int>(1, 4)(rng)),
                  ids[std::uniform_int_distribution<std::size_t>(0, ids.size() - 1)(rng)],
                  std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? Polarity::negated : Polarity::affirmed});
      return s;
    };
    const auto gold = random_set();
    const auto pred = round % 10 == 0 ? gold : random_set();
    auto close = [&](const LabeledSet& s) {
      LabeledSet out = s;
      for (const auto& l : s)
        for (const auto& a : reach.at(l.hpo)) out.insert({l.doc_id, a, l.polarity});
      return out;
    };
    const auto g = close(gold), p = close(pred);
    std::size_t tp = 0;
    for (const auto& l : p) tp += g.count(l);
    const std::size_t fp = p.size() - tp, fn = g.size() - tp;
    const double prec = p.empty() ? 0 : double(tp) / double(p.size());
    const double rec = g.empty() ? 0 : double(tp) / double(g.size());
    const double f1 = prec + rec == 0 ? 0 : 2 * prec * rec / (prec + rec);

    const auto got = evaluate_generalized(gold, pred, Ontology(terms));
    if (got.tp == tp && got.fp == fp && got.fn == fn && got.precision == prec && got.recall == rec && got.f1 == f1)
      ++matched;
  }
  o.require(matched == 100, std::to_string(matched) + "/100 random instances match");

  const LabeledSet gold = {{"d1", "HP:0001945", Polarity::affirmed}};
  const LabeledSet pred = {{"d1", "HP:0011134", Polarity::affirmed}};
  const auto m = evaluate_generalized(gold, pred, resources().ontology);
  std::ostringstream ss;
  ss << "hand example P=" << m.precision << " R=" << m.recall << " F1=" << m.f1;
  o.require(std::abs(m.precision - 2.0 / 3) <= kMetricTol && std::abs(m.recall - 1.0) <= kMetricTol &&
                std::abs(m.f1 - 0.8) <= kMetricTol,
            ss.str());
  if (o.ok) o.detail = "100/100 random instances match; " + ss.str();
  return o;
}

// ---- synthetic corpus ----------------------------------------------------

Outcome synthetic_corpus() {
  Outcome o;
  const auto docs = corpus("synthetic");
  std::size_t sentences = 0;
  for (const auto& d : docs) sentences += d.sentences.size();
  o.require(sentences == 20, std::to_string(sentences) + " sentences");
  const auto gold = parse_labels(detail::read_file(data("corpus/synthetic_gold.jsonl")));
  for (const auto& want : std::vector<Label>{{"d01", "HP:0001945", Polarity::affirmed},
                                             {"d03", "HP:0002045", Polarity::affirmed},
                                             {"d04", "HP:0002789", Polarity::affirmed},
                                             {"d05", "HP:0003259", Polarity::affirmed},
                                             {"d05", "HP:0012101", Polarity::affirmed},
                                             {"d07", "HP:0004370", Polarity::negated}})
    o.require(gold.count(want) == 1, "gold lacks " + want.doc_id + " " + want.hpo);

  const auto first = annotate_corpus(docs, resources());
  for (const auto& a : first) o.require(a.doc_id != "d06", "hospitalization days were annotated");
  const auto m = evaluate_exact(gold, labels_of(first));
  std::ostringstream ss;
  ss << "exact F1=" << m.f1 << " (tp " << m.tp << " fp " << m.fp << " fn " << m.fn << ")";
  o.require(m.f1 == 1.0, ss.str());

  const auto reference = to_jsonl(first);
  o.require(to_jsonl(annotate_corpus(docs, resources())) == reference, "second run differs");
  for (const unsigned jobs : {2u, 3u, 8u})
    o.require(to_jsonl(annotate_corpus(docs, resources(), {}, jobs)) == reference,
              "--jobs " + std::to_string(jobs) + " differs");

  // the same through the command line
  std::string cli_ref;
  for (const char* jobs : {"1", "1", "4"}) {
    std::ostringstream out, err;
    const int rc = cli::run({"annotate", "--kb", data("sample_kb.csv"), "--ontology", data("hpo_mini.obo"),
                             "--lexicon", NR_SAMPLE_LEXICON, "--input", data("corpus/synthetic.conllu"), "--jobs",
                             jobs},
                            out, err);
    o.require(rc == 0, "nr annotate exited " + std::to_string(rc) + ": " + err.str());
    if (cli_ref.empty()) cli_ref = out.str();
    o.require(out.str() == cli_ref && out.str() == reference, "nr annotate output differs at --jobs " +
                                                                  std::string(jobs));
  }
  if (o.ok) o.detail = ss.str() + ", byte-identical across runs and --jobs 1/2/3/4/8";
  return o;
}

// ---- lexicon format ------------------------------------------------------

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

Outcome lexicon_format() {
  Outcome o;
  Lexicon lex(3);
  lex.insert("temperature", {1.0f, -0.0f, 3.4028235e38f});
  lex.insert("heart rate", {1e-45f, 0.1f, -2.5f});
  lex.insert("pyrexia", {0.75f, 0.25f, -0.5f});
  const auto bytes = serialize_lexicon(lex);
  const auto back = deserialize_lexicon(bytes);
  bool exact = back.size() == lex.size() && back.dim() == lex.dim();
  for (const auto& [k, row] : lex.table()) {
    const auto* r = back.find(k);
    if (!r) {
      exact = false;
      continue;
    }
    for (std::size_t i = 0; i < row.size(); ++i)
      exact = exact && std::bit_cast<std::uint32_t>(row[i]) == std::bit_cast<std::uint32_t>((*r)[i]);
  }
  o.require(exact && serialize_lexicon(back) == bytes, "round trip not bit-exact");

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  const auto e1 = error_of([&] { deserialize_lexicon(bad_magic); });
  o.require(e1.find("not a lexicon file") != std::string::npos, "corrupted magic gave '" + e1 + "'");
  const auto e2 = error_of([&] { deserialize_lexicon(std::string_view(bytes).substr(0, bytes.size() - 1)); });
  o.require(e2.find("truncated at entry 2") != std::string::npos, "truncated entry gave '" + e2 + "'");
  const auto e3 = error_of([&] { deserialize_lexicon(std::string_view(bytes).substr(0, 9)); });
  o.require(e3.find("truncated header") != std::string::npos, "truncated header gave '" + e3 + "'");
  const auto e4 = error_of([&] { deserialize_lexicon(bytes, 4); });
  o.require(e4.find("dim mismatch: expected 4, got 3") != std::string::npos, "dim check gave '" + e4 + "'");

  const auto shipped = load_lexicon(NR_SAMPLE_LEXICON);
  o.require(serialize_lexicon(shipped) == detail::read_file(NR_SAMPLE_LEXICON), "shipped lexicon does not re-encode");
  if (o.ok) o.detail = "bit-exact round trip; magic, truncation and dim errors as specified";
  return o;
}

struct Criterion {
  std::string name;
  std::function<Outcome()> check;
  double budget_sec;  // 0: no runtime bound
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"pyrexia-sentence", pyrexia, kFastBudgetSec},
      {"unit-inference-92", worked_example_92, 0},
      {"assignment-grid-oracle", assignment_grid, kFastBudgetSec},
      {"sts-gradient-check", gradient_check, 0},
      {"toy-training-and-paraphrase-recall", toy_training, kTrainingBudgetSec},
      {"evaluation-oracle", evaluation_oracle, 0},
      {"synthetic-corpus-end-to-end", synthetic_corpus, 0},
      {"lexicon-binary-format", lexicon_format, 0},
  };
  // Resources load once; the timed criteria measure the work, not file loading.
  resources();

  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_sec > 0 && secs >= c.budget_sec && o.ok) {
      o.ok = false;
      o.detail = "took " + std::to_string(secs) + " s, budget " + std::to_string(c.budget_sec) + " s";
    }
    std::ostringstream time;
    time.precision(3);
    time << std::fixed << secs;
    std::cout << (o.ok ? "PASS" : "FAIL") << "  " << c.name << "  [" << time.str() << " s]  " << o.detail << "\n";
    if (!o.ok) ++failures;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << "\n";
  return failures == 0 ? 0 : 1;
}

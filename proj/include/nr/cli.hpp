#pragma once

// `nr` command line: annotate, evaluate, kb validate, embed train, embed nearest.
// Exit codes: 0 success, 1 validation or metric-definition failure, 2 resource/IO failure.

#include <cstdlib>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nr/evaluation.hpp"
#include "nr/parse_client.hpp"
#include "nr/pipeline.hpp"
#include "nr/training.hpp"

namespace nr::cli {

inline constexpr int kOk = 0;
inline constexpr int kValidationFailure = 1;
inline constexpr int kResourceFailure = 2;

struct RunConfig {
  std::string kb;
  std::string ontology;
  std::string lexicon;
  std::string input;
  std::string output = "-";
  std::string gold;
  std::string pred;
  std::string exclusions;
  std::string parse_service;
  std::string mode;  // empty: both with --ontology, exact without
  double threshold = kDefaultThreshold;
  std::string linker = "embedding";
  bool suppress_negated = false;
  bool ignore_polarity = false;
  unsigned jobs = 1;
};

/// Reads `key=value` lines; '#' starts a comment line.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::map<std::string, std::string> out;
  std::size_t lineno = 0;
  const auto text = detail::read_file(path);
  for (auto line : detail::lines(text)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value in " + path, lineno);
    out[std::string(detail::trim(t.substr(0, eq)))] = std::string(detail::trim(t.substr(eq + 1)));
  }
  return out;
}

namespace detail {

// Config entries become command-line arguments unless the flag was given
// explicitly; command line > config file > NR_THRESHOLD > built-in default.
inline std::vector<std::string> merge_config(std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  auto given = [&](const std::string& flag) {
    for (const auto& a : args)
      if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> extra;
  for (const auto& [key, value] : read_config_file(config_path)) {
    const auto flag = "--" + key;
    if (given(flag)) continue;
    if (value == "true" || value == "false") {
      if (value == "true") extra.push_back(flag);
    } else {
      extra.push_back(flag);
      extra.push_back(value);
    }
  }
  // Options go after the subcommand path so they bind to the leaf command.
  std::size_t insert_at = 0;
  while (insert_at < args.size() && args[insert_at].rfind("-", 0) != 0) ++insert_at;
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), extra.begin(), extra.end());
  return args;
}

inline double default_threshold() {
  if (const char* env = std::getenv("NR_THRESHOLD"))
    if (const auto v = nr::detail::parse_double(env)) return *v;
  return kDefaultThreshold;
}

inline std::string format4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

}  // namespace detail

inline int cmd_annotate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!(cfg.threshold > 0.0 && cfg.threshold <= 1.0)) {
    err << "error: threshold must lie in (0, 1]\n";
    return kValidationFailure;
  }
  LinkerMode mode;
  if (cfg.linker == "embedding") {
    mode = LinkerMode::embedding;
  } else if (cfg.linker == "shallow") {
    mode = LinkerMode::shallow;
  } else {
    err << "error: --linker must be 'embedding' or 'shallow'\n";
    return kValidationFailure;
  }

  std::optional<Resources> res;
  try {
    auto kb = load_kb(cfg.kb);
    auto ontology = parse_ontology(cfg.ontology);
    auto lexicon = load_lexicon(cfg.lexicon);
    auto exclusions = cfg.exclusions.empty() ? default_exclusions() : load_exclusions(cfg.exclusions);
    res.emplace(std::move(kb), std::move(ontology), std::move(lexicon), std::move(exclusions));
  } catch (const Error& e) {
    err << "error: loading resources: " << e.what() << "\n";
    return kResourceFailure;
  }

  std::vector<Document> docs;
  try {
    const auto text = nr::detail::read_file(cfg.input);
    if (looks_like_conllu(text) || nr::detail::trim(text).empty()) {
      docs = parse_conllu(text);
    } else if (!cfg.parse_service.empty()) {
      const ParseServiceClient client(cfg.parse_service);
      for (const auto& raw : split_raw_documents(text)) docs.push_back(client.parse(raw));
    } else {
      err << "error: input is not CoNLL-U; parse it first or pass --parse-service URL\n";
      return kResourceFailure;
    }
  } catch (const Error& e) {
    err << "error: reading input: " << e.what() << "\n";
    return kResourceFailure;
  }

  AnnotateOptions opts;
  opts.threshold = cfg.threshold;
  opts.linker = mode;
  opts.suppress_negated = cfg.suppress_negated;
  AnnotateStats stats;
  std::vector<Annotation> annotations;
  try {
    annotations = annotate_corpus(docs, *res, opts, cfg.jobs, &stats);
  } catch (const Error& e) {
    err << "error: annotating: " << e.what() << "\n";
    return kValidationFailure;
  }

  const auto jsonl = to_jsonl(annotations);
  if (cfg.output.empty() || cfg.output == "-") {
    out << jsonl;
  } else {
    try {
      nr::detail::write_file(cfg.output, jsonl);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kResourceFailure;
    }
  }
  err << "documents=" << stats.documents << " numbers=" << stats.numbers << " linked=" << stats.linked
      << " annotated=" << stats.annotated << "\n";
  return kOk;
}

inline int cmd_evaluate(RunConfig cfg, std::ostream& out, std::ostream& err) {
  if (cfg.mode.empty()) cfg.mode = cfg.ontology.empty() ? "exact" : "both";
  if (cfg.mode != "exact" && cfg.mode != "generalized" && cfg.mode != "both") {
    err << "error: --mode must be exact, generalized or both\n";
    return kValidationFailure;
  }
  LabeledSet gold, pred;
  std::optional<Ontology> ontology;
  try {
    gold = parse_labels(nr::detail::read_file(cfg.gold));
    pred = parse_labels(nr::detail::read_file(cfg.pred));
    if (cfg.mode != "exact") {
      if (cfg.ontology.empty()) {
        err << "error: generalized scoring needs --ontology\n";
        return kResourceFailure;
      }
      ontology.emplace(parse_ontology(cfg.ontology));
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }

  const EvalOptions opts{cfg.ignore_polarity};
  std::vector<std::pair<std::string, Metrics>> rows;
  try {
    if (cfg.mode != "generalized") rows.emplace_back("exact", evaluate_exact(gold, pred, opts));
    if (cfg.mode != "exact") rows.emplace_back("generalized", evaluate_generalized(gold, pred, *ontology, opts));
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }

  for (const auto& [name, m] : rows) {
    nlohmann::ordered_json j;
    j["mode"] = name;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["fn"] = m.fn;
    out << j.dump() << "\n";
  }
  out << std::left << std::setw(12) << "mode" << std::right << std::setw(10) << "precision" << std::setw(10)
      << "recall" << std::setw(10) << "f1" << std::setw(7) << "tp" << std::setw(7) << "fp" << std::setw(7) << "fn"
      << "\n";
  for (const auto& [name, m] : rows)
    out << std::left << std::setw(12) << name << std::right << std::setw(10) << detail::format4(m.precision)
        << std::setw(10) << detail::format4(m.recall) << std::setw(10) << detail::format4(m.f1) << std::setw(7)
        << m.tp << std::setw(7) << m.fp << std::setw(7) << m.fn << "\n";
  return kOk;
}

inline int cmd_kb_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  std::optional<KnowledgeBase> kb;
  try {
    kb.emplace(parse_kb_tables(nr::detail::read_file(cfg.kb)));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }
  const auto violations = validate_kb(*kb);
  for (const auto& v : violations) out << v.rule << (v.row.empty() ? "" : ": " + v.row) << "\n";
  out << violations.size() << " violations\n";
  return violations.empty() ? kOk : kValidationFailure;
}

struct TrainArgs {
  std::string synonyms;
  std::string out;
  TrainConfig config;
};

inline int cmd_embed_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  SynonymTable table;
  try {
    table = load_synonym_table(args.synonyms);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }
  TrainResult result;
  try {
    result = train_lexicon(table, args.config,
                           [&err](int epoch, double loss) { err << "epoch " << epoch << " loss " << loss << "\n"; });
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kValidationFailure;
  }
  try {
    save_lexicon(result.lexicon, args.out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }
  out << "initial_loss=" << result.initial_loss << " final_loss=" << result.epoch_losses.back()
      << " nearest_entity_accuracy=" << nearest_entity_accuracy(result.lexicon, table) << " entries="
      << result.lexicon.size() << "\n";
  return kOk;
}

inline int cmd_embed_nearest(const std::string& lexicon_path, const std::string& names_path, std::size_t k,
                             const std::string& phrase, std::ostream& out, std::ostream& err) {
  Lexicon lexicon;
  SynonymTable table;
  try {
    lexicon = load_lexicon(lexicon_path);
    table = load_synonym_table(names_path);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kResourceFailure;
  }
  const auto refs = reference_embeddings(lexicon, table);
  const auto ranked = rank_entities(lexicon, refs, phrase);
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.entity == ranked[i].entity; });
    out << (i + 1) << "\t" << to_string(ranked[i].entity) << "\t" << it->name << "\t" << detail::format4(ranked[i].score)
        << "\n";
  }
  return kOk;
}

/// Entry point shared by the `nr` binary and tests.
inline int run(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    args = detail::merge_config(std::move(args));
  } catch (const Error& e) {
    err << "error: config: " << e.what() << "\n";
    return kResourceFailure;
  }

  CLI::App app{"Numerical reasoning phenotype annotator"};
  app.require_subcommand(1);
  RunConfig cfg;
  cfg.threshold = detail::default_threshold();
  std::string config_path;

  auto* annotate = app.add_subcommand("annotate", "Annotate CoNLL-U documents with HPO concepts");
  annotate->add_option("--config", config_path, "key=value file with defaults for these flags");
  annotate->add_option("--kb", cfg.kb, "Knowledge base file")->required();
  annotate->add_option("--ontology", cfg.ontology, "HPO ontology (OBO or TSV edge list)")->required();
  annotate->add_option("--lexicon", cfg.lexicon, "NREMB1 lexicon file")->required();
  annotate->add_option("--input", cfg.input, "CoNLL-U input (raw text with --parse-service)")->required();
  annotate->add_option("--output", cfg.output, "JSONL output path, '-' for stdout");
  annotate->add_option("--exclusions", cfg.exclusions, "Alpha-numeric exclusion list");
  annotate->add_option("--threshold", cfg.threshold, "Cosine threshold for linking");
  annotate->add_option("--linker", cfg.linker, "embedding or shallow");
  annotate->add_flag("--suppress-negated", cfg.suppress_negated, "Omit negated annotations");
  annotate->add_option("--jobs", cfg.jobs, "Worker threads")->check(CLI::PositiveNumber);
  annotate->add_option("--parse-service", cfg.parse_service, "Base URL of a /parse service for raw text");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold annotations");
  evaluate->add_option("--config", config_path, "key=value file with defaults for these flags");
  evaluate->add_option("--gold", cfg.gold, "Gold JSONL")->required();
  evaluate->add_option("--pred", cfg.pred, "Predicted JSONL")->required();
  evaluate->add_option("--ontology", cfg.ontology, "HPO ontology for generalized scoring");
  evaluate->add_option("--mode", cfg.mode, "exact, generalized or both (default: both when --ontology is given)");
  evaluate->add_flag("--ignore-polarity", cfg.ignore_polarity, "Match on HPO id only");

  auto* kb = app.add_subcommand("kb", "Knowledge base tools");
  kb->require_subcommand(1);
  auto* kb_validate = kb->add_subcommand("validate", "Check knowledge base invariants");
  kb_validate->add_option("--config", config_path, "key=value file with defaults for these flags");
  kb_validate->add_option("--kb", cfg.kb, "Knowledge base file")->required();

  TrainArgs train;
  auto* embed = app.add_subcommand("embed", "Embedding lexicon tools");
  embed->require_subcommand(1);
  auto* embed_train = embed->add_subcommand("train", "Train a token lexicon on a synonym table");
  embed_train->add_option("--config", config_path, "key=value file with defaults for these flags");
  embed_train->add_option("--synonyms", train.synonyms, "KB-format file with #ENTITIES and #SYNONYMS")->required();
  embed_train->add_option("--out", train.out, "Output lexicon path")->required();
  embed_train->add_option("--dim", train.config.dim, "Vector dimension")->check(CLI::PositiveNumber);
  embed_train->add_option("--epochs", train.config.epochs, "Epochs")->check(CLI::PositiveNumber);
  embed_train->add_option("--lr", train.config.learning_rate, "Learning rate")->check(CLI::PositiveNumber);
  embed_train->add_option("--batch", train.config.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  embed_train->add_option("--seed", train.config.seed, "Random seed");
  embed_train->add_option("--neg-ratio", train.config.negative_ratio, "Negatives per positive when sampling")
      ->check(CLI::PositiveNumber);

  std::string nearest_lexicon, nearest_names, phrase;
  std::size_t k = 5;
  auto* embed_nearest = embed->add_subcommand("nearest", "Rank entities by cosine with a phrase");
  embed_nearest->add_option("--config", config_path, "key=value file with defaults for these flags");
  embed_nearest->add_option("--lexicon", nearest_lexicon, "NREMB1 lexicon file")->required();
  embed_nearest->add_option("--kb", nearest_names, "KB-format file supplying entity names")->required();
  embed_nearest->add_option("-k,--top", k, "Entities to print")->check(CLI::PositiveNumber);
  embed_nearest->add_option("phrase", phrase, "Phrase to embed")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kValidationFailure;
  }

  if (*annotate) return cmd_annotate(cfg, out, err);
  if (*evaluate) return cmd_evaluate(cfg, out, err);
  if (*kb_validate) return cmd_kb_validate(cfg, out, err);
  if (*embed_train) return cmd_embed_train(train, out, err);
  if (*embed_nearest) return cmd_embed_nearest(nearest_lexicon, nearest_names, k, phrase, out, err);
  return kValidationFailure;
}

}  // namespace nr::cli

#pragma once

#include <string>
#include <vector>

#include "nr/conllu.hpp"
#include "nr/embedding.hpp"
#include "nr/knowledge.hpp"
#include "nr/ontology.hpp"
#include "nr/training.hpp"

namespace nr::test {

inline std::string data_path(const std::string& rel) { return std::string(NR_DATA_DIR) + "/" + rel; }

inline const KnowledgeBase& sample_kb() {
  static const KnowledgeBase kb = load_kb(data_path("sample_kb.csv"));
  return kb;
}

inline const Ontology& mini_ontology() {
  static const Ontology o = parse_ontology(data_path("hpo_mini.obo"));
  return o;
}

inline const Lexicon& sample_lexicon() {
  static const Lexicon lex = load_lexicon(NR_SAMPLE_LEXICON);
  return lex;
}

inline const SynonymTable& toy_table() {
  static const SynonymTable t = load_synonym_table(data_path("toy_synonyms.csv"));
  return t;
}

inline const TrainResult& toy_training() {
  static const TrainResult r = train_lexicon(toy_table(), TrainConfig{});
  return r;
}

struct Tok {
  std::string form;
  std::string upos;
  int head;
  std::string deprel;
};

/// CoNLL-U block for one sentence, text = forms joined by single spaces.
inline std::string conllu_block(const std::vector<Tok>& toks, const std::string& doc_id = "t") {
  std::string text;
  for (const auto& t : toks) text += (text.empty() ? "" : " ") + t.form;
  std::string out = "# newdoc id = " + doc_id + "\n# text = " + text + "\n";
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const auto& t = toks[i];
    out += std::to_string(i + 1) + "\t" + t.form + "\t" + detail::to_lower(t.form) + "\t" + t.upos +
           "\t_\t_\t" + std::to_string(t.head) + "\t" + t.deprel + "\t_\t_\n";
  }
  return out + "\n";
}

inline Sentence make_sentence(const std::vector<Tok>& toks) {
  return parse_conllu(conllu_block(toks)).at(0).sentences.at(0);
}

inline Sentence pyrexia_sentence() {
  return parse_conllu(detail::read_file(data_path("corpus/pyrexia.conllu"))).at(0).sentences.at(0);
}

}  // namespace nr::test

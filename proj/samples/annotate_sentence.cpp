// Annotates one dependency-parsed sentence with the library API and prints
// every intermediate step: numbers, candidates, link and HPO assignment.
//
//   annotate_sentence <data dir> <lexicon.bin>

#include <iostream>

#include "nr/assignment.hpp"
#include "nr/conllu.hpp"
#include "nr/pipeline.hpp"

int main(int argc, char** argv) {
  if (argc != 3) {
    std::cerr << "usage: annotate_sentence <data dir> <lexicon.bin>\n";
    return 1;
  }
  const std::string dir = argv[1];
  try {
    const nr::Resources res(nr::load_kb(dir + "/sample_kb.csv"), nr::parse_ontology(dir + "/hpo_mini.obo"),
                            nr::load_lexicon(argv[2]));
    const auto docs = nr::parse_conllu(nr::detail::read_file(dir + "/corpus/pyrexia.conllu"));
    const auto& sentence = docs.at(0).sentences.at(0);
    std::cout << "sentence: " << sentence.text << "\n";

    for (const auto& number : nr::extract_numbers(sentence, res.exclusions)) {
      const auto set = nr::extract_candidates(sentence, number);
      std::cout << "number " << number.raw << " = " << number.value << "\n";
      for (const auto& c : set.candidates) std::cout << "  candidate '" << c.phrase << "' via " << c.relation_path << "\n";

      const auto linked = nr::link(set, res.entity_embeddings, res.lexicon);
      if (!linked) {
        std::cout << "  no entity above threshold\n";
        continue;
      }
      const auto& entity = res.kb.entity(linked->entity);
      const auto unit = nr::infer_unit(number.value, res.kb.ranges(linked->entity), number.unit_hint);
      const auto a = nr::assign_hpo(linked->entity, number.value, unit, res.kb);
      std::cout << "  linked '" << linked->candidate.phrase << "' -> " << entity.name << " (cosine "
                << linked->score << ")\n"
                << "  unit " << unit << " -> " << a.hpo << " " << res.ontology.term(a.hpo).name << " ["
                << nr::to_string(a.polarity) << "]\n";
    }

    std::cout << "\nJSONL:\n" << nr::to_jsonl(nr::annotate_corpus(docs, res));
  } catch (const nr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

// Trains a small lexicon on a synonym table, then ranks the table's entities
// against a few phrases.
//
//   train_and_rank <synonyms.csv> [phrase...]

#include <iomanip>
#include <iostream>

#include "nr/training.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: train_and_rank <synonyms.csv> [phrase...]\n";
    return 1;
  }
  try {
    const auto table = nr::load_synonym_table(argv[1]);
    nr::TrainConfig cfg;
    cfg.dim = 32;
    const auto result = nr::train_lexicon(table, cfg, [](int epoch, double loss) {
      if (epoch % 50 == 0) std::cout << "epoch " << std::setw(3) << epoch << "  loss " << loss << "\n";
    });
    std::cout << "nearest-entity accuracy on the table: " << nr::nearest_entity_accuracy(result.lexicon, table)
              << "\n\n";

    const auto refs = nr::reference_embeddings(result.lexicon, table);
    std::vector<std::string> phrases(argv + 2, argv + argc);
    if (phrases.empty()) phrases = {"fever", "pulse rate", "platelets"};
    for (const auto& phrase : phrases) {
      const auto ranked = nr::rank_entities(result.lexicon, refs, phrase);
      std::cout << phrase << ":";
      for (std::size_t i = 0; i < std::min<std::size_t>(3, ranked.size()); ++i) {
        const auto& e = ranked[i];
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& t) { return t.entity == e.entity; });
        std::cout << "  " << it->name << " " << std::fixed << std::setprecision(3) << e.score;
      }
      std::cout << "\n";
    }
  } catch (const nr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

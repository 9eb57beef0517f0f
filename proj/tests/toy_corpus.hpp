#pragma once

#include <string>

#include "cdap/data_model.hpp"

namespace toy {

// Synthetic sequence-labeling corpus with vocabulary-separable classes: every
// class owns a small private word list, entities are 1-2 words long, filler
// words are shared. Deterministic per seed.
struct ToyOptions {
  int n_classes = 5;
  int words_per_class = 6;
  int sentences = 200;
  double two_entity_fraction = 0.35;
  std::uint64_t seed = 1;
};

cdap::Corpus make_corpus(const ToyOptions& options);

// token<TAB>label file for driving the CLI.
void write_conll(const cdap::Corpus& corpus, const std::string& path);

}  // namespace toy

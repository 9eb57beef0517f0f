#pragma once

#include <vector>

#include "cdap/encoder.hpp"
#include "cdap/episodes.hpp"

namespace cdap {

// Everything a forward pass needs besides the episode itself.
struct ModelContext {
  Tape& tape;
  const Config& config;
  const EmbeddingProvider& provider;
  ParamVars params;
};

ModelContext make_context(Tape& tape, const Config& config, const EmbeddingProvider& provider,
                          ParameterStore& store);

// The aggregator phi: attention weights softmax(bank * query) over bank rows,
// output = weighted sum of rows. adaptive=false forces constant attention
// logits, which collapses to the arithmetic row mean.
Var attention_aggregate(Tape& tape, Var query_row, Var bank, bool adaptive = true);
// Same per row of `queries`; row i uses row i as its own query.
Var attention_aggregate_batch(Tape& tape, Var queries, Var bank, bool adaptive = true);

// softmax over negative distances to the class-ordered prototypes.
Var token_distribution(Tape& tape, Var h_row, const std::vector<Var>& prototypes,
                       bool squared = true);

// Support token representations, stacked over all support sentences with
// their IO labels.
struct TokenBank {
  Var reprs;                // T_s x d
  std::vector<int> labels;  // IO class id per row
};
TokenBank build_support_tokens(ModelContext& ctx, const Episode& episode);

// Token-level output for one query sentence.
struct TokenSentence {
  Var logits;  // n x (N+1), entry (i, j) = -dist(h_i, prototype_j(i))
  Var probs;   // row_softmax(logits)
  std::vector<int> argmax;
};
TokenSentence token_forward(ModelContext& ctx, const TokenBank& bank, Var query_tokens,
                            const LabelSpace& label_space);

struct TokenLoss {
  Var loss;  // summed NLL of gold IO labels over every query token
  std::vector<TokenSentence> sentences;
  std::vector<std::vector<int>> gold;
};
TokenLoss token_loss(ModelContext& ctx, const Episode& episode);

}  // namespace cdap

#pragma once

#include <vector>

#include "cdap/token_network.hpp"

namespace cdap {

// Enumerated support spans with their representations and labels.
struct SupportSpans {
  Var reprs;  // S_s x d, before cross-attention
  std::vector<SpanLabel> labels;
};
// cap <= 0 means no length limit.
SupportSpans build_support_spans(ModelContext& ctx, const Episode& episode, int cap);

std::vector<Span> capped_spans(int n, int cap);

// Transformer-style enhancement of both banks: each side attends over the
// other, then residual + FFN + layer norm with shared weights.
struct EnhancedBanks {
  Var support;  // S-bar
  Var query;    // Q-bar
};
EnhancedBanks cross_attention(ModelContext& ctx, Var support, Var query);

// Class-O prototype for one query row: aggregate each non-empty sub-class
// bank, then aggregate the sub-prototypes.
Var o_prototype(ModelContext& ctx, Var query_row, const std::vector<Var>& subclass_banks);

// softmax over negative distances to (z0, z1, ..., zN), O first.
Var span_distribution(Tape& tape, Var query_row, const std::vector<Var>& prototypes,
                      bool squared = true);

// Span-level output over one batch of query spans (all sentences stacked).
struct SpanForward {
  Var logits;  // S_q x (N+1)
  Var probs;
  std::vector<int> sentence;     // query sentence index per row
  std::vector<Span> spans;       // span per row
  std::vector<int> row_begin;    // per sentence: first row (plus one past-end entry)
};
SpanForward span_forward(ModelContext& ctx, const SupportSpans& support,
                         const std::vector<Var>& query_token_reprs,
                         const std::vector<std::vector<Span>>& query_spans,
                         const LabelSpace& label_space);

struct SpanLoss {
  Var loss;  // summed NLL over every enumerated query span, O sub-classes merged
  SpanForward forward;
  std::vector<int> gold;  // per row, in {O, 1..N}
};
SpanLoss span_loss(ModelContext& ctx, const Episode& episode);

}  // namespace cdap

#pragma once

#include <ostream>
#include <vector>

#include "cdap/span_network.hpp"

namespace cdap {

// For each token, the row index (into `spans`) of the covering span whose
// maximum class probability is largest; ties go to the lexicographically
// smallest (start, end).
std::vector<int> select_spans_for_tokens(const std::vector<Span>& spans,
                                         const Matrix& span_probs, int n_tokens);

// Token-level logits from the span network: each token gets the full logit
// row of its selected span.
Var span_to_token_logits(Tape& tape, Var span_logits, const std::vector<Span>& spans,
                         const Matrix& span_probs, int n_tokens);

// Bidirectional temperature-scaled KL divergence between the two token-level
// logit sets, summed over rows. st/ts keep only one direction.
Var consistent_loss(Tape& tape, Var token_logits, Var span_logits, double temperature,
                    ConsistencyKind kind = ConsistencyKind::bidirectional);

// lambda*L_t + beta*L_s + gamma*L_c
Var total_loss(Tape& tape, Var lt, Var ls, Var lc, double lambda, double beta, double gamma);

struct EpisodeLoss {
  Var total, lt, ls, lc;
  TokenLoss token;
  SpanLoss span;
};
EpisodeLoss episode_loss(ModelContext& ctx, const Episode& episode);

struct StepTrace {
  std::int64_t step = 0;
  double lt = 0, ls = 0, lc = 0, total = 0, lr = 0;
};

// Algorithm-1 training loop: per step, forward a batch of episodes, sum their
// total losses, backward, AdamW with the warmup/decay schedule. Episodes are
// consumed cyclically. trace_csv, when given, receives
// `step,L_t,L_s,L_c,total,lr` lines (losses summed over the batch).
std::vector<StepTrace> train(ParameterStore& store, const std::vector<Episode>& episodes,
                             const Config& config, const EmbeddingProvider& provider,
                             std::ostream* trace_csv = nullptr);

}  // namespace cdap

#pragma once

#include <vector>

#include "cdap/consistency.hpp"

namespace cdap {

// A span the span network predicts as an entity, with its raw probability,
// token-level disagreement count, and adjusted probability.
struct SpanCandidate {
  int sentence = 0;
  Span span;
  int class_id = 0;       // entity class, never O
  double raw_p = 0.0;     // probability of the predicted class
  int inconsistent = 0;   // tokens inside whose token-level label differs
  double adjusted_p = 0.0;  // raw_p - delta * inconsistent, may go negative
};

// Tokens in [start, end] whose token-level prediction differs from class_id.
int count_inconsistent(const Span& span, int class_id,
                       const std::vector<int>& token_predictions);

// No clamping: the result may be negative and stays selectable.
double adjust_probability(double raw_p, double delta, int count);

// Repeatedly keep the candidate with maximal adjusted probability (ties:
// higher raw probability, then smaller (start, end)) and drop everything in
// the same sentence overlapping it. Output is in selection order.
std::vector<SpanCandidate> greedy_select(std::vector<SpanCandidate> candidates);

struct SentenceDecode {
  std::vector<int> token_predictions;     // argmax IO label per token
  std::vector<SpanCandidate> candidates;  // entity-argmax spans, adjusted
  std::vector<SpanCandidate> selected;    // greedy_select output
};

struct EpisodeDecode {
  std::vector<SentenceDecode> sentences;                // one per query sentence
  int gold_spans_over_cap = 0;  // gold entities longer than max_len (unreachable)
};

// Algorithm-2 decoding of every query sentence: token argmax, entity-argmax
// span candidates capped at max_len, probability adjustment, greedy selection.
// The span bank at decode time holds one sentence's spans against the full
// support bank.
EpisodeDecode decode_episode(ParameterStore& store, const Config& config,
                             const EmbeddingProvider& provider, const Episode& episode,
                             double delta, int max_len);

enum class DecodeStrategy {
  consistent_greedy,  // adjusted probabilities + greedy
  span_only,          // greedy over raw probabilities
  token_only,         // contiguous runs of the token network's IO labels
  intersection,       // spans extracted identically by both networks
  union_merge,        // span-network output plus non-overlapping token spans
};
DecodeStrategy parse_strategy(const std::string& name);

std::vector<EntitySpan> extract_sentence(const SentenceDecode& decode, DecodeStrategy strategy);

}  // namespace cdap

#include "cdap/inference.hpp"

#include <algorithm>

namespace cdap {

int count_inconsistent(const Span& span, int class_id,
                       const std::vector<int>& token_predictions) {
  int count = 0;
  for (int t = span.start; t <= span.end; ++t)
    if (token_predictions.at(t) != class_id) ++count;
  return count;
}

double adjust_probability(double raw_p, double delta, int count) {
  return raw_p - delta * count;
}

namespace {

bool better(const SpanCandidate& a, const SpanCandidate& b) {
  if (a.adjusted_p != b.adjusted_p) return a.adjusted_p > b.adjusted_p;
  if (a.raw_p != b.raw_p) return a.raw_p > b.raw_p;
  if (a.sentence != b.sentence) return a.sentence < b.sentence;
  return a.span < b.span;
}

}  // namespace

std::vector<SpanCandidate> greedy_select(std::vector<SpanCandidate> candidates) {
  std::vector<SpanCandidate> selected;
  while (!candidates.empty()) {
    size_t best = 0;
    for (size_t i = 1; i < candidates.size(); ++i)
      if (better(candidates[i], candidates[best])) best = i;
    SpanCandidate pick = candidates[best];
    std::erase_if(candidates, [&](const SpanCandidate& c) {
      return c.sentence == pick.sentence && c.span.overlaps(pick.span);
    });
    selected.push_back(std::move(pick));
  }
  return selected;
}

EpisodeDecode decode_episode(ParameterStore& store, const Config& config,
                             const EmbeddingProvider& provider, const Episode& episode,
                             double delta, int max_len) {
  if (max_len < 1) throw ContractError("decode_episode: max_len must be >= 1");
  Tape tape;
  ModelContext ctx = make_context(tape, config, provider, store);
  TokenBank token_bank = build_support_tokens(ctx, episode);
  SupportSpans support = build_support_spans(ctx, episode, config.train_span_cap);

  EpisodeDecode out;
  // The cross-attention query bank spans the whole episode query set, the
  // same shape the network was trained with.
  std::vector<Var> query_reprs;
  std::vector<std::vector<Span>> query_spans;
  std::vector<TokenSentence> token_outputs;
  for (const LabeledSentence& sentence : episode.query) {
    for (const EntitySpan& e : sentence.entity_spans)
      if (e.span().length() > max_len) ++out.gold_spans_over_cap;
    Var u = tape.constant(provider.embed(sentence.tokens));
    Var h = project_tokens(tape, u, ctx.params);
    token_outputs.push_back(token_forward(ctx, token_bank, h, episode.label_space));
    query_reprs.push_back(u);
    query_spans.push_back(capped_spans(sentence.size(), max_len));
  }
  SpanForward span = span_forward(ctx, support, query_reprs, query_spans, episode.label_space);
  const Matrix& probs = tape.value(span.probs);

  for (size_t si = 0; si < episode.query.size(); ++si) {
    SentenceDecode dec;
    dec.token_predictions = token_outputs[si].argmax;
    for (int row = span.row_begin[si]; row < span.row_begin[si + 1]; ++row) {
      int best = 0;
      for (int j = 1; j < probs.cols(); ++j)
        if (probs(row, j) > probs(row, best)) best = j;
      if (best == kOutsideClass) continue;
      SpanCandidate c;
      c.sentence = int(si);
      c.span = span.spans[row];
      c.class_id = best;
      c.raw_p = probs(row, best);
      c.inconsistent = count_inconsistent(c.span, best, dec.token_predictions);
      c.adjusted_p = adjust_probability(c.raw_p, delta, c.inconsistent);
      dec.candidates.push_back(c);
    }
    dec.selected = greedy_select(dec.candidates);
    out.sentences.push_back(std::move(dec));
  }
  return out;
}

DecodeStrategy parse_strategy(const std::string& name) {
  if (name == "consistent-greedy") return DecodeStrategy::consistent_greedy;
  if (name == "span-only") return DecodeStrategy::span_only;
  if (name == "token-only") return DecodeStrategy::token_only;
  if (name == "intersection") return DecodeStrategy::intersection;
  if (name == "union") return DecodeStrategy::union_merge;
  throw ValidationError("unknown strategy '" + name + "'");
}

namespace {

std::vector<EntitySpan> sorted_spans(std::vector<EntitySpan> spans) {
  std::sort(spans.begin(), spans.end());
  return spans;
}

std::vector<EntitySpan> selected_to_spans(const std::vector<SpanCandidate>& selected) {
  std::vector<EntitySpan> out;
  for (const SpanCandidate& c : selected) out.push_back({c.span.start, c.span.end, c.class_id});
  return sorted_spans(std::move(out));
}

std::vector<EntitySpan> span_only_extraction(const SentenceDecode& decode) {
  std::vector<SpanCandidate> raw = decode.candidates;
  for (SpanCandidate& c : raw) c.adjusted_p = c.raw_p;
  return selected_to_spans(greedy_select(std::move(raw)));
}

}  // namespace

std::vector<EntitySpan> extract_sentence(const SentenceDecode& decode, DecodeStrategy strategy) {
  switch (strategy) {
    case DecodeStrategy::consistent_greedy:
      return selected_to_spans(decode.selected);
    case DecodeStrategy::span_only:
      return span_only_extraction(decode);
    case DecodeStrategy::token_only:
      return spans_from_io_labels(decode.token_predictions);
    case DecodeStrategy::intersection: {
      std::vector<EntitySpan> spans = span_only_extraction(decode);
      std::vector<EntitySpan> tokens = spans_from_io_labels(decode.token_predictions);
      std::vector<EntitySpan> out;
      for (const EntitySpan& s : spans)
        if (std::find(tokens.begin(), tokens.end(), s) != tokens.end()) out.push_back(s);
      return out;
    }
    case DecodeStrategy::union_merge: {
      // The span network's picks win; token spans fill untouched regions.
      std::vector<EntitySpan> out = span_only_extraction(decode);
      for (const EntitySpan& t : spans_from_io_labels(decode.token_predictions)) {
        bool clashes = false;
        for (const EntitySpan& s : out)
          if (t.span().overlaps(s.span())) clashes = true;
        if (!clashes) out.push_back(t);
      }
      return sorted_spans(std::move(out));
    }
  }
  throw ContractError("extract_sentence: bad strategy");
}

}  // namespace cdap

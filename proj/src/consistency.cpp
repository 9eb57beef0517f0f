#include "cdap/consistency.hpp"

#include <cmath>

namespace cdap {

std::vector<int> select_spans_for_tokens(const std::vector<Span>& spans,
                                         const Matrix& span_probs, int n_tokens) {
  if (int(spans.size()) != span_probs.rows())
    throw ShapeError("select_spans_for_tokens: " + std::to_string(spans.size()) +
                     " spans vs probs " + span_probs.shape_str());
  std::vector<double> max_prob(spans.size());
  for (size_t k = 0; k < spans.size(); ++k) {
    double best = span_probs(int(k), 0);
    for (int j = 1; j < span_probs.cols(); ++j) best = std::max(best, span_probs(int(k), j));
    max_prob[k] = best;
  }
  std::vector<int> selected(n_tokens, -1);
  for (int t = 0; t < n_tokens; ++t) {
    // Spans are enumerated in (start, end) order, so a strict > implements the
    // smallest-(start,end) tie break.
    for (size_t k = 0; k < spans.size(); ++k) {
      if (!spans[k].contains(t)) continue;
      if (selected[t] < 0 || max_prob[k] > max_prob[selected[t]]) selected[t] = int(k);
    }
    if (selected[t] < 0)
      throw ContractError("select_spans_for_tokens: token " + std::to_string(t) +
                          " covered by no span");
  }
  return selected;
}

Var span_to_token_logits(Tape& tape, Var span_logits, const std::vector<Span>& spans,
                         const Matrix& span_probs, int n_tokens) {
  return tape.gather_rows(span_logits,
                          select_spans_for_tokens(spans, span_probs, n_tokens));
}

Var consistent_loss(Tape& tape, Var token_logits, Var span_logits, double temperature,
                    ConsistencyKind kind) {
  const Matrix& lt = tape.value(token_logits);
  const Matrix& ls = tape.value(span_logits);
  if (!lt.same_shape(ls))
    throw ContractError("consistent_loss: logit shapes differ, token " + lt.shape_str() +
                        " vs span " + ls.shape_str());
  // Teacher side is tempered, the other side is compared as-is; both carry
  // gradient.
  Var ts = tape.kl_div(tape.scaled_softmax(token_logits, temperature),
                       tape.row_softmax(span_logits));
  if (kind == ConsistencyKind::ts) return ts;
  Var st = tape.kl_div(tape.scaled_softmax(span_logits, temperature),
                       tape.row_softmax(token_logits));
  if (kind == ConsistencyKind::st) return st;
  return tape.add(ts, st);
}

Var total_loss(Tape& tape, Var lt, Var ls, Var lc, double lambda, double beta, double gamma) {
  return tape.add(tape.add(tape.scale(lt, lambda), tape.scale(ls, beta)),
                  tape.scale(lc, gamma));
}

EpisodeLoss episode_loss(ModelContext& ctx, const Episode& episode) {
  Tape& t = ctx.tape;
  EpisodeLoss out;
  out.token = token_loss(ctx, episode);
  out.span = span_loss(ctx, episode);

  // Align both networks on the IO token space: per token, the token network
  // emits its logits directly and the span network contributes the logits of
  // the covering span with the highest class probability.
  const SpanForward& sf = out.span.forward;
  std::vector<Var> token_rows, span_rows;
  for (size_t si = 0; si < episode.query.size(); ++si) {
    int begin = sf.row_begin[si];
    int end = sf.row_begin[si + 1];
    std::vector<Span> spans(sf.spans.begin() + begin, sf.spans.begin() + end);
    const Matrix& all_probs = t.value(sf.probs);
    Matrix probs(end - begin, all_probs.cols());
    for (int r = begin; r < end; ++r)
      for (int c = 0; c < all_probs.cols(); ++c) probs(r - begin, c) = all_probs(r, c);
    std::vector<int> sel = select_spans_for_tokens(spans, probs, episode.query[si].size());
    for (int& k : sel) k += begin;
    span_rows.push_back(t.gather_rows(sf.logits, sel));
    token_rows.push_back(out.token.sentences[si].logits);
  }
  out.lt = out.token.loss;
  out.ls = out.span.loss;
  out.lc = consistent_loss(t, t.stack_rows(token_rows), t.stack_rows(span_rows),
                           ctx.config.temperature, ctx.config.consistency);
  out.total = total_loss(t, out.lt, out.ls, out.lc, ctx.config.lambda, ctx.config.beta,
                         ctx.config.gamma);
  return out;
}

std::vector<StepTrace> train(ParameterStore& store, const std::vector<Episode>& episodes,
                             const Config& config, const EmbeddingProvider& provider,
                             std::ostream* trace_csv) {
  if (episodes.empty() && config.max_steps > 0)
    throw ValidationError("training needs at least one episode");
  if (config.batch_episodes < 1) throw ValidationError("batch_episodes must be >= 1");
  if (config.warmup_steps > config.max_steps)
    throw ValidationError("warmup_steps (" + std::to_string(config.warmup_steps) +
                          ") exceeds max_steps (" + std::to_string(config.max_steps) + ")");
  if (trace_csv) *trace_csv << "step,L_t,L_s,L_c,total,lr\n";
  std::vector<StepTrace> trace;
  Tape tape;
  size_t cursor = 0;
  for (std::int64_t step = 0; step < config.max_steps; ++step) {
    tape.reset();
    ModelContext ctx = make_context(tape, config, provider, store);
    StepTrace row;
    Var batch_total;
    for (int b = 0; b < config.batch_episodes; ++b) {
      const Episode& ep = episodes[cursor];
      cursor = (cursor + 1) % episodes.size();
      EpisodeLoss loss = episode_loss(ctx, ep);
      row.lt += tape.value(loss.lt).scalar();
      row.ls += tape.value(loss.ls).scalar();
      row.lc += tape.value(loss.lc).scalar();
      batch_total = batch_total.valid() ? tape.add(batch_total, loss.total) : loss.total;
    }
    row.total = tape.value(batch_total).scalar();
    if (!std::isfinite(row.total))
      throw DivergenceError("non-finite loss at step " + std::to_string(step) +
                            " (episode index " + std::to_string(cursor) + ")");
    tape.backward(batch_total);
    // Optimizer steps are 1-based in the schedule so the first update is not
    // multiplied by a zero warmup factor.
    double lr = lr_at(store.step() + 1, config.lr_model, config.warmup_steps, config.max_steps);
    double lr_emb =
        lr_at(store.step() + 1, config.lr_embedding, config.warmup_steps, config.max_steps);
    AdamOptions opts;
    opts.weight_decay = config.weight_decay;
    adam_step(store, lr, lr_emb, opts);
    row.step = store.step();
    row.lr = lr;
    if (trace_csv)
      *trace_csv << row.step << "," << row.lt << "," << row.ls << "," << row.lc << ","
                 << row.total << "," << row.lr << "\n";
    trace.push_back(row);
  }
  return trace;
}

}  // namespace cdap

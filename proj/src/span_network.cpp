#include "cdap/span_network.hpp"

namespace cdap {

std::vector<Span> capped_spans(int n, int cap) {
  return enumerate_spans(n, cap > 0 ? std::min(cap, n) : n);
}

SupportSpans build_support_spans(ModelContext& ctx, const Episode& episode, int cap) {
  SupportSpans out;
  std::vector<Var> per_sentence;
  for (const LabeledSentence& s : episode.support) {
    std::vector<Span> spans = capped_spans(s.size(), cap);
    Var u = ctx.tape.constant(ctx.provider.embed(s.tokens));
    per_sentence.push_back(span_reprs(ctx.tape, u, spans, ctx.params));
    std::vector<SpanLabel> labels = label_spans(s.entity_spans, spans);
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
  }
  out.reprs = ctx.tape.stack_rows(per_sentence);
  return out;
}

namespace {

Var ffn(ModelContext& ctx, Var x) {
  Tape& t = ctx.tape;
  Var hidden = t.relu(t.add_row_broadcast(t.matmul_nt(x, ctx.params.ffn1_w), ctx.params.ffn1_b));
  return t.add_row_broadcast(t.matmul_nt(hidden, ctx.params.ffn2_w), ctx.params.ffn2_b);
}

Var enhance(ModelContext& ctx, Var own, Var attended) {
  Tape& t = ctx.tape;
  return t.layer_norm(t.add(own, ffn(ctx, attended)), ctx.params.norm_gain, ctx.params.norm_bias,
                      ctx.config.layer_norm);
}

}  // namespace

EnhancedBanks cross_attention(ModelContext& ctx, Var support, Var query) {
  Tape& t = ctx.tape;
  if (t.value(support).rows() < 1 || t.value(query).rows() < 1)
    throw ContractError("cross_attention: empty span bank");
  Var s_hat = attention_aggregate_batch(t, support, query);
  Var q_hat = attention_aggregate_batch(t, query, support);
  return {enhance(ctx, support, s_hat), enhance(ctx, query, q_hat)};
}

Var o_prototype(ModelContext& ctx, Var query_row, const std::vector<Var>& subclass_banks) {
  Tape& t = ctx.tape;
  bool adaptive = ctx.config.adaptive_prototypes;
  std::vector<Var> sub_protos;
  for (Var bank : subclass_banks) {
    if (!bank.valid() || t.value(bank).rows() == 0) continue;
    sub_protos.push_back(attention_aggregate(t, query_row, bank, adaptive));
  }
  if (sub_protos.empty()) throw ContractError("o_prototype: all sub-class banks empty");
  if (sub_protos.size() == 1) return sub_protos[0];
  return attention_aggregate(t, query_row, t.stack_rows(sub_protos), adaptive);
}

Var span_distribution(Tape& tape, Var query_row, const std::vector<Var>& prototypes,
                      bool squared) {
  if (prototypes.size() < 2) throw ContractError("span_distribution: need >= 2 prototypes");
  return tape.row_softmax(tape.neg_euclidean(query_row, tape.stack_rows(prototypes), squared));
}

SpanForward span_forward(ModelContext& ctx, const SupportSpans& support,
                         const std::vector<Var>& query_token_reprs,
                         const std::vector<std::vector<Span>>& query_spans,
                         const LabelSpace& label_space) {
  Tape& t = ctx.tape;
  const int n_entity = label_space.n_entity_classes();
  bool adaptive = ctx.config.adaptive_prototypes;
  bool squared = ctx.config.distance == DistanceKind::squared_euclidean;
  if (ctx.config.o_division == ODivisionKind::esd)
    throw ValidationError("o_division=esd is a reserved hook and not implemented");

  SpanForward out;
  std::vector<Var> per_sentence;
  for (size_t si = 0; si < query_token_reprs.size(); ++si) {
    if (query_spans[si].empty()) throw ContractError("span_forward: sentence with no spans");
    out.row_begin.push_back(int(out.spans.size()));
    per_sentence.push_back(
        span_reprs(t, query_token_reprs[si], query_spans[si], ctx.params));
    for (const Span& sp : query_spans[si]) {
      out.sentence.push_back(int(si));
      out.spans.push_back(sp);
    }
  }
  out.row_begin.push_back(int(out.spans.size()));
  Var query_bank = t.stack_rows(per_sentence);

  Var s_bar = support.reprs;
  Var q_bar = query_bank;
  if (ctx.config.cross_attention) {
    EnhancedBanks banks = cross_attention(ctx, support.reprs, query_bank);
    s_bar = banks.support;
    q_bar = banks.query;
  }

  // Rows of the (enhanced) support bank per entity class and O sub-class.
  std::vector<std::vector<int>> entity_rows(n_entity + 1);
  std::vector<std::vector<int>> sub_rows(3);
  for (size_t i = 0; i < support.labels.size(); ++i) {
    const SpanLabel& l = support.labels[i];
    if (l.is_entity)
      entity_rows[l.class_id].push_back(int(i));
    else
      sub_rows[int(l.sub)].push_back(int(i));
  }
  for (int c = 1; c <= n_entity; ++c)
    if (entity_rows[c].empty())
      throw ValidationError("support has no span of class '" + label_space.name(c) +
                            "' within the length cap");
  if (sub_rows[0].empty() && sub_rows[1].empty() && sub_rows[2].empty())
    throw ValidationError("support has no non-entity span");

  // Per-query-row adaptive prototypes, O first.
  const int rows = int(out.spans.size());
  std::vector<Var> o_hats;
  for (const auto& idx : sub_rows) {
    if (idx.empty()) continue;
    o_hats.push_back(attention_aggregate_batch(t, q_bar, t.gather_rows(s_bar, idx), adaptive));
  }
  Var z0;
  if (o_hats.size() == 1) {
    z0 = o_hats[0];
  } else {
    std::vector<Var> weight_cols;
    for (Var oh : o_hats) weight_cols.push_back(t.rowwise_dot(q_bar, oh));
    Var weights = t.row_softmax(adaptive ? t.concat_cols(weight_cols)
                                         : t.scale(t.concat_cols(weight_cols), 0.0));
    for (size_t k = 0; k < o_hats.size(); ++k) {
      Var col = t.pick_per_row(weights, std::vector<int>(rows, int(k)));
      Var term = t.scale_rows(o_hats[k], col);
      z0 = z0.valid() ? t.add(z0, term) : term;
    }
  }

  std::vector<Var> dist_cols;
  dist_cols.push_back(t.rowwise_neg_euclidean(q_bar, z0, squared));
  for (int c = 1; c <= n_entity; ++c) {
    Var proto =
        attention_aggregate_batch(t, q_bar, t.gather_rows(s_bar, entity_rows[c]), adaptive);
    dist_cols.push_back(t.rowwise_neg_euclidean(q_bar, proto, squared));
  }
  out.logits = t.concat_cols(dist_cols);
  out.probs = t.row_softmax(out.logits);
  return out;
}

SpanLoss span_loss(ModelContext& ctx, const Episode& episode) {
  Tape& t = ctx.tape;
  const int cap = ctx.config.train_span_cap;
  SupportSpans support = build_support_spans(ctx, episode, cap);

  std::vector<Var> query_reprs;
  std::vector<std::vector<Span>> query_spans;
  std::vector<int> gold;
  for (const LabeledSentence& q : episode.query) {
    query_reprs.push_back(t.constant(ctx.provider.embed(q.tokens)));
    std::vector<Span> spans = capped_spans(q.size(), cap);
    std::vector<SpanLabel> labels = label_spans(q.entity_spans, spans);
    for (const SpanLabel& l : labels) gold.push_back(l.is_entity ? l.class_id : kOutsideClass);
    query_spans.push_back(std::move(spans));
  }

  SpanLoss out;
  out.forward = span_forward(ctx, support, query_reprs, query_spans, episode.label_space);
  out.gold = std::move(gold);
  out.loss = t.scale(t.sum(t.log(t.pick_per_row(out.forward.probs, out.gold))), -1.0);
  return out;
}

}  // namespace cdap

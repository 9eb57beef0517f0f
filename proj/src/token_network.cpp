#include "cdap/token_network.hpp"

namespace cdap {

ModelContext make_context(Tape& tape, const Config& config, const EmbeddingProvider& provider,
                          ParameterStore& store) {
  return ModelContext{tape, config, provider, make_param_vars(tape, store)};
}

Var attention_aggregate_batch(Tape& tape, Var queries, Var bank, bool adaptive) {
  const Matrix& bv = tape.value(bank);
  if (bv.rows() < 1) throw ContractError("attention_aggregate: empty bank");
  if (bv.cols() != tape.value(queries).cols())
    throw ShapeError("attention_aggregate: queries " + tape.value(queries).shape_str() +
                     " vs bank " + bv.shape_str());
  Var logits = tape.matmul_nt(queries, bank);
  if (!adaptive) logits = tape.scale(logits, 0.0);  // constant weights = plain mean
  return tape.matmul(tape.row_softmax(logits), bank);
}

Var attention_aggregate(Tape& tape, Var query_row, Var bank, bool adaptive) {
  if (tape.value(query_row).rows() != 1)
    throw ShapeError("attention_aggregate: query must be a single row, got " +
                     tape.value(query_row).shape_str());
  return attention_aggregate_batch(tape, query_row, bank, adaptive);
}

Var token_distribution(Tape& tape, Var h_row, const std::vector<Var>& prototypes, bool squared) {
  if (prototypes.size() < 2) throw ContractError("token_distribution: need >= 2 prototypes");
  return tape.row_softmax(tape.neg_euclidean(h_row, tape.stack_rows(prototypes), squared));
}

TokenBank build_support_tokens(ModelContext& ctx, const Episode& episode) {
  TokenBank bank;
  std::vector<Var> per_sentence;
  for (const LabeledSentence& s : episode.support) {
    Var u = ctx.tape.constant(ctx.provider.embed(s.tokens));
    per_sentence.push_back(project_tokens(ctx.tape, u, ctx.params));
    std::vector<int> io = io_labels_from_spans(s);
    bank.labels.insert(bank.labels.end(), io.begin(), io.end());
  }
  bank.reprs = ctx.tape.stack_rows(per_sentence);
  return bank;
}

namespace {

std::vector<std::vector<int>> rows_by_class(const std::vector<int>& labels, int n_classes) {
  std::vector<std::vector<int>> by_class(n_classes);
  for (size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(int(i));
  return by_class;
}

}  // namespace

TokenSentence token_forward(ModelContext& ctx, const TokenBank& bank, Var query_tokens,
                            const LabelSpace& label_space) {
  Tape& t = ctx.tape;
  int n_classes = label_space.size();
  auto by_class = rows_by_class(bank.labels, n_classes);
  for (int c = 0; c < n_classes; ++c)
    if (by_class[c].empty())
      throw ValidationError("support has no token of class '" + label_space.name(c) + "'");
  bool squared = ctx.config.distance == DistanceKind::squared_euclidean;
  std::vector<Var> dist_cols;
  dist_cols.reserve(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    Var class_bank = t.gather_rows(bank.reprs, by_class[c]);
    Var prototypes =
        attention_aggregate_batch(t, query_tokens, class_bank, ctx.config.adaptive_prototypes);
    dist_cols.push_back(t.rowwise_neg_euclidean(query_tokens, prototypes, squared));
  }
  TokenSentence out;
  out.logits = t.concat_cols(dist_cols);
  out.probs = t.row_softmax(out.logits);
  const Matrix& p = t.value(out.probs);
  out.argmax.resize(p.rows());
  for (int i = 0; i < p.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < p.cols(); ++j)
      if (p(i, j) > p(i, best)) best = j;
    out.argmax[i] = best;
  }
  return out;
}

TokenLoss token_loss(ModelContext& ctx, const Episode& episode) {
  Tape& t = ctx.tape;
  TokenBank bank = build_support_tokens(ctx, episode);

  TokenLoss out;
  Var loss;
  for (const LabeledSentence& q : episode.query) {
    Var u = t.constant(ctx.provider.embed(q.tokens));
    Var h = project_tokens(t, u, ctx.params);
    TokenSentence sent = token_forward(ctx, bank, h, episode.label_space);
    std::vector<int> gold = io_labels_from_spans(q);
    Var nll = t.scale(t.sum(t.log(t.pick_per_row(sent.probs, gold))), -1.0);
    loss = loss.valid() ? t.add(loss, nll) : nll;
    out.sentences.push_back(std::move(sent));
    out.gold.push_back(std::move(gold));
  }
  if (!loss.valid()) throw ValidationError("episode has no query sentences");
  out.loss = loss;
  return out;
}

}  // namespace cdap

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "cdap/consistency.hpp"
#include "model_fixture.hpp"
#include "test_util.hpp"

using namespace cdap;

TEST_SUITE_BEGIN("consistency");

namespace {

Episode tiny_episode() {
  Episode ep;
  ep.label_space = LabelSpace({"c1", "c2"});
  ep.support = {fixture::sentence({"a", "b", "c"}, {{0, 0, 1}, {2, 2, 2}}),
                fixture::sentence({"d", "e"}, {{0, 1, 1}})};
  ep.query = {fixture::sentence({"f", "g", "h"}, {{1, 1, 2}}),
              fixture::sentence({"i", "j"}, {{0, 0, 1}})};
  ep.validate();
  return ep;
}

// Separable mini corpus: per class a small private vocabulary, shared filler.
std::vector<Episode> mini_corpus_episodes(int n_episodes, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> fill = {"the", "of", "and", "on"};
  auto word = [&](int cls, int i) { return "w" + std::to_string(cls) + "_" + std::to_string(i); };
  std::vector<Episode> episodes;
  for (int e = 0; e < n_episodes; ++e) {
    Episode ep;
    ep.label_space = LabelSpace({"c1", "c2"});
    auto make = [&](int cls) {
      LabeledSentence s;
      s.tokens = {fill[rng.below(fill.size())], word(cls, int(rng.below(4))),
                  fill[rng.below(fill.size())]};
      s.entity_spans = {{1, 1, cls}};
      return s;
    };
    ep.support = {make(1), make(2)};
    ep.query = {make(1), make(2)};
    ep.validate();
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

}  // namespace

TEST_CASE("span selection: a single covering span wins by default") {
  std::vector<Span> spans = {{0, 0}};
  Matrix probs{{0.2, 0.8}};
  auto sel = select_spans_for_tokens(spans, probs, 1);
  CHECK(sel == std::vector<int>{0});
}

TEST_CASE("span selection: the higher-max-probability span wins") {
  std::vector<Span> spans = {{0, 0}, {0, 1}};
  Matrix probs{{0.6, 0.4}, {0.1, 0.8}};
  auto sel = select_spans_for_tokens(spans, probs, 2);
  CHECK(sel == std::vector<int>{1, 1});
}

TEST_CASE("span selection: ties go to the smallest (start, end)") {
  std::vector<Span> spans = {{0, 0}, {0, 1}, {1, 1}};
  Matrix probs{{0.7, 0.3}, {0.7, 0.3}, {0.3, 0.7}};
  auto sel = select_spans_for_tokens(spans, probs, 2);
  CHECK(sel[0] == 0);  // (0,0) beats (0,1) on the tie
  CHECK(sel[1] == 1);  // (0,1) beats (1,1) on the tie
}

TEST_CASE("span_to_token_logits routes the selected rows") {
  Tape t;
  Var logits = t.constant(Matrix{{1.0, 2.0}, {3.0, 4.0}});
  Matrix probs{{0.6, 0.4}, {0.9, 0.1}};
  Var routed = span_to_token_logits(t, logits, {{0, 0}, {0, 1}}, probs, 2);
  CHECK(t.value(routed)(0, 0) == 3.0);  // span (0,1) has the higher max prob
  CHECK(t.value(routed)(1, 0) == 3.0);
}

TEST_CASE("consistent loss is zero for identical logits at T=1") {
  Rng rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    Matrix l = testutil::random_matrix(4, 5, rng, 3.0);
    Var loss = consistent_loss(t, t.constant(l), t.constant(l), 1.0);
    CHECK(std::abs(t.value(loss).scalar()) < 1e-9);
  }
}

TEST_CASE("consistent loss is zero for all-zero logits at any temperature") {
  Tape t;
  Var zeros = t.constant(Matrix(3, 4));
  for (double temp : {0.5, 1.0, 4.0}) {
    Var loss = consistent_loss(t, zeros, zeros, temp);
    CHECK(std::abs(t.value(loss).scalar()) < 1e-12);
  }
}

TEST_CASE("consistent loss closed form: opposite one-hot logits give 0.9242") {
  Tape t;
  Var lt = t.constant(Matrix{{1.0, 0.0}});
  Var ls = t.constant(Matrix{{0.0, 1.0}});
  Var loss = consistent_loss(t, lt, ls, 1.0);
  double e = std::exp(1.0);
  double expected = 2.0 * (e - 1.0) / (e + 1.0);  // each direction is (e-1)/(e+1)
  CHECK(t.value(loss).scalar() == doctest::Approx(expected).epsilon(1e-9));
  CHECK(t.value(loss).scalar() == doctest::Approx(0.9242).epsilon(1e-4));

  Var ts_only = consistent_loss(t, lt, ls, 1.0, ConsistencyKind::ts);
  Var st_only = consistent_loss(t, lt, ls, 1.0, ConsistencyKind::st);
  CHECK(t.value(ts_only).scalar() == doctest::Approx(expected / 2.0).epsilon(1e-9));
  CHECK(t.value(st_only).scalar() == doctest::Approx(expected / 2.0).epsilon(1e-9));
}

TEST_CASE("consistent loss is symmetric in its arguments") {
  Rng rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    Tape t;
    Matrix a = testutil::random_matrix(3, 4, rng, 2.0);
    Matrix b = testutil::random_matrix(3, 4, rng, 2.0);
    double temp = 0.5 + rng.uniform01() * 3.0;
    Var fwd = consistent_loss(t, t.constant(a), t.constant(b), temp);
    Var rev = consistent_loss(t, t.constant(b), t.constant(a), temp);
    CHECK(t.value(fwd).scalar() == doctest::Approx(t.value(rev).scalar()).epsilon(1e-12));
  }
}

TEST_CASE("consistent loss rejects mismatched label spaces") {
  Tape t;
  CHECK_THROWS_AS(consistent_loss(t, t.constant(Matrix(2, 3)), t.constant(Matrix(2, 4)), 1.0),
                  ContractError);
}

TEST_CASE("total loss arithmetic and linearity") {
  Tape t;
  auto scalar = [&](double v) { return t.constant(Matrix{{v}}); };
  Var total = total_loss(t, scalar(2.0), scalar(3.0), scalar(4.0), 0.1, 1.0, 0.05);
  CHECK(t.value(total).scalar() == doctest::Approx(3.4).epsilon(1e-12));

  // gamma = 0 drops the consistency term; lambda = gamma = 0 is span-only.
  Var no_c = total_loss(t, scalar(2.0), scalar(3.0), scalar(999.0), 0.1, 1.0, 0.0);
  CHECK(t.value(no_c).scalar() == doctest::Approx(0.1 * 2.0 + 3.0));
  Var span_only = total_loss(t, scalar(999.0), scalar(3.0), scalar(999.0), 0.0, 1.0, 0.0);
  CHECK(t.value(span_only).scalar() == doctest::Approx(3.0));

  Rng rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2), c = rng.uniform(-2, 2);
    double lt1 = rng.uniform(0, 3), lt2 = rng.uniform(0, 3);
    Var left = total_loss(t, scalar(lt1 + lt2), scalar(1.0), scalar(1.0), a, b, c);
    Var right = t.add(total_loss(t, scalar(lt1), scalar(1.0), scalar(1.0), a, b, c),
                      total_loss(t, scalar(lt2), scalar(0.0), scalar(0.0), a, b, c));
    CHECK(t.value(left).scalar() == doctest::Approx(t.value(right).scalar()).epsilon(1e-9));
  }
}

TEST_CASE("full objective passes the finite-difference check on a 2-sentence episode") {
  Config cfg;
  cfg.embed_dim = 6;
  cfg.model_dim = 4;
  cfg.seed = 2024;
  cfg.train_span_cap = 4;
  ParameterStore store = make_parameter_store(cfg);
  HashedRandomProvider provider(cfg.embed_dim, cfg.seed);
  Episode ep = tiny_episode();

  auto result = testutil::max_fd_error(store, [&](ParameterStore& s, bool backward) {
    Tape t;
    ModelContext ctx = make_context(t, cfg, provider, s);
    EpisodeLoss loss = episode_loss(ctx, ep);
    if (backward) t.backward(loss.total);
    return t.value(loss.total).scalar();
  });
  INFO("worst parameter: ", result.worst_param);
  CHECK(result.max_rel_err < 1e-4);
}

TEST_CASE("training for zero steps leaves the parameters untouched") {
  Config cfg;
  cfg.embed_dim = 6;
  cfg.model_dim = 4;
  cfg.max_steps = 0;
  cfg.warmup_steps = 0;
  ParameterStore store = make_parameter_store(cfg);
  Matrix before = store.at(param_names::token_w).value;
  HashedRandomProvider provider(cfg.embed_dim, cfg.seed);
  auto trace = train(store, mini_corpus_episodes(4, 3), cfg, provider);
  CHECK(trace.empty());
  CHECK(store.at(param_names::token_w).value == before);
}

TEST_CASE("identical seeds give identical loss traces") {
  Config cfg;
  cfg.embed_dim = 8;
  cfg.model_dim = 6;
  cfg.max_steps = 5;
  cfg.warmup_steps = 2;
  cfg.seed = 10;
  auto run = [&] {
    ParameterStore store = make_parameter_store(cfg);
    HashedRandomProvider provider(cfg.embed_dim, cfg.seed);
    std::ostringstream csv;
    train(store, mini_corpus_episodes(6, 77), cfg, provider, &csv);
    return csv.str();
  };
  std::string a = run();
  std::string b = run();
  CHECK(a == b);
  CHECK(a.find("step,L_t,L_s,L_c,total,lr") == 0);
}

TEST_CASE("300 steps on a separable mini corpus beat the step-10 loss") {
  Config cfg;
  cfg.embed_dim = 16;
  cfg.model_dim = 8;
  cfg.max_steps = 300;
  cfg.warmup_steps = 30;
  cfg.batch_episodes = 2;
  cfg.seed = 4;
  ParameterStore store = make_parameter_store(cfg);
  HashedRandomProvider provider(cfg.embed_dim, cfg.seed);
  auto trace = train(store, mini_corpus_episodes(24, 11), cfg, provider);
  REQUIRE(trace.size() == 300);
  CHECK(trace.back().total < trace[9].total);
}

TEST_CASE("a poisoned parameter aborts training with a divergence error") {
  Config cfg;
  cfg.embed_dim = 6;
  cfg.model_dim = 4;
  cfg.max_steps = 3;
  cfg.warmup_steps = 0;
  ParameterStore store = make_parameter_store(cfg);
  store.at(param_names::token_w).value(0, 0) = std::nan("");
  HashedRandomProvider provider(cfg.embed_dim, cfg.seed);
  CHECK_THROWS_AS(train(store, mini_corpus_episodes(4, 5), cfg, provider), DivergenceError);
}

TEST_SUITE_END();

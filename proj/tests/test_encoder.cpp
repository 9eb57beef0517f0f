#include <doctest.h>

#include <fstream>

#include "cdap/encoder.hpp"
#include "test_util.hpp"

using namespace cdap;

TEST_SUITE_BEGIN("encoder");

namespace {

Config small_config() {
  Config cfg;
  cfg.embed_dim = 4;
  cfg.model_dim = 3;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("hashed provider is deterministic per token string") {
  HashedRandomProvider provider(64, 7);
  Matrix u = provider.embed({"same", "other", "same"});
  CHECK(u.rows() == 3);
  CHECK(u.cols() == 64);
  for (int j = 0; j < 64; ++j) {
    CHECK(u(0, j) == u(2, j));
    CHECK(u(0, j) >= -1.0);
    CHECK(u(0, j) <= 1.0);
  }
  HashedRandomProvider reseeded(64, 8);
  Matrix v = reseeded.embed({"same"});
  bool any_differs = false;
  for (int j = 0; j < 64; ++j) any_differs = any_differs || v(0, j) != u(0, j);
  CHECK(any_differs);
}

TEST_CASE("provider dimension follows the config") {
  Config cfg;
  cfg.embed_dim = 64;
  auto provider = make_provider(cfg);
  CHECK(provider->embed({"a", "b"}).cols() == 64);
}

TEST_CASE("pretrained provider echoes the file and falls back on OOV") {
  const char* path = "embeddings_fixture.txt";
  {
    std::ofstream out(path);
    out << "the 0.1 0.2\n";
    out << "cat -1 3\n";
  }
  PretrainedProvider provider(path, 2, 7);
  Matrix u = provider.embed({"the", "cat", "unseen"});
  CHECK(u(0, 0) == doctest::Approx(0.1));
  CHECK(u(0, 1) == doctest::Approx(0.2));
  CHECK(u(1, 0) == doctest::Approx(-1.0));
  HashedRandomProvider fallback(2, 7);
  Matrix fb = fallback.embed({"unseen"});
  CHECK(u(2, 0) == fb(0, 0));
  CHECK(u(2, 1) == fb(0, 1));
  std::remove(path);
}

TEST_CASE("pretrained provider rejects malformed vector lines") {
  const char* path = "embeddings_bad.txt";
  {
    std::ofstream out(path);
    out << "ok 1 2\n";
    out << "short 1\n";
  }
  CHECK_THROWS_WITH_AS(PretrainedProvider(path, 2, 7), doctest::Contains("line 2"), ParseError);
  std::remove(path);
}

TEST_CASE("project_tokens with identity weights echoes U") {
  Config cfg = small_config();
  cfg.model_dim = cfg.embed_dim;  // square so W can be the identity
  ParameterStore store = make_parameter_store(cfg);
  Param& w = store.at(param_names::token_w);
  w.value.fill(0.0);
  for (int i = 0; i < cfg.model_dim; ++i) w.value(i, i) = 1.0;
  store.at(param_names::token_b).value.fill(0.0);

  Tape t;
  ParamVars params = make_param_vars(t, store);
  Rng rng(3);
  Matrix u = testutil::random_matrix(5, cfg.embed_dim, rng);
  Var h = project_tokens(t, t.constant(u), params);
  CHECK(t.value(h) == u);
}

TEST_CASE("project_tokens with zero input yields the bias in every row") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Var h = project_tokens(t, t.constant(Matrix(4, cfg.embed_dim)), params);
  const Matrix& bias = store.at(param_names::token_b).value;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < cfg.model_dim; ++j) CHECK(t.value(h)(i, j) == bias(0, j));
}

TEST_CASE("project_tokens matches the naive affine oracle") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Rng rng(9);
  Matrix u = testutil::random_matrix(6, cfg.embed_dim, rng);
  Var h = project_tokens(t, t.constant(u), params);

  const Matrix& w = store.at(param_names::token_w).value;
  const Matrix& b = store.at(param_names::token_b).value;
  for (int i = 0; i < 6; ++i)
    for (int r = 0; r < cfg.model_dim; ++r) {
      double expected = b(0, r);
      for (int k = 0; k < cfg.embed_dim; ++k) expected += w(r, k) * u(i, k);
      CHECK(t.value(h)(i, r) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("span_reprs uses the boundary tokens, twice for single-token spans") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Rng rng(13);
  Matrix u = testutil::random_matrix(4, cfg.embed_dim, rng);
  Var reprs = t.constant(Matrix(0, 0));
  reprs = span_reprs(t, t.constant(u), {{1, 1}, {0, 2}}, params);

  const Matrix& w = store.at(param_names::span_w).value;
  const Matrix& b = store.at(param_names::span_b).value;
  auto expected_row = [&](int left, int right, int r) {
    double acc = b(0, r);
    for (int k = 0; k < cfg.embed_dim; ++k) {
      acc += w(r, k) * u(left, k);
      acc += w(r, cfg.embed_dim + k) * u(right, k);
    }
    return acc;
  };
  for (int r = 0; r < cfg.model_dim; ++r) {
    CHECK(t.value(reprs)(0, r) == doctest::Approx(expected_row(1, 1, r)).epsilon(1e-12));
    CHECK(t.value(reprs)(1, r) == doctest::Approx(expected_row(0, 2, r)).epsilon(1e-12));
  }
}

TEST_CASE("span_reprs with zero weights collapses to the bias") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  store.at(param_names::span_w).value.fill(0.0);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Rng rng(17);
  Matrix u = testutil::random_matrix(3, cfg.embed_dim, rng);
  Var reprs = span_reprs(t, t.constant(u), {{0, 1}, {2, 2}}, params);
  const Matrix& b = store.at(param_names::span_b).value;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < cfg.model_dim; ++j) CHECK(t.value(reprs)(i, j) == b(0, j));
}

TEST_CASE("span_reprs rejects out-of-range spans") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Var u = t.constant(Matrix(3, cfg.embed_dim));
  CHECK_THROWS_AS(span_reprs(t, u, {{0, 3}}, params), ContractError);
  CHECK_THROWS_AS(span_reprs(t, u, {{2, 1}}, params), ContractError);
}

TEST_CASE("both projections are linear in U once the bias is zeroed") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  store.at(param_names::token_b).value.fill(0.0);
  store.at(param_names::span_b).value.fill(0.0);
  Tape t;
  ParamVars params = make_param_vars(t, store);
  Rng rng(23);
  Matrix u1 = testutil::random_matrix(4, cfg.embed_dim, rng);
  Matrix u2 = testutil::random_matrix(4, cfg.embed_dim, rng);
  double a = 0.7, b = -1.3;
  Matrix mix(4, cfg.embed_dim);
  for (size_t i = 0; i < mix.size(); ++i)
    mix.data()[i] = a * u1.data()[i] + b * u2.data()[i];

  std::vector<Span> spans = {{0, 2}, {3, 3}};
  Var h_mix = project_tokens(t, t.constant(mix), params);
  Var h1 = project_tokens(t, t.constant(u1), params);
  Var h2 = project_tokens(t, t.constant(u2), params);
  Var s_mix = span_reprs(t, t.constant(mix), spans, params);
  Var s1 = span_reprs(t, t.constant(u1), spans, params);
  Var s2 = span_reprs(t, t.constant(u2), spans, params);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < cfg.model_dim; ++j)
      CHECK(t.value(h_mix)(i, j) ==
            doctest::Approx(a * t.value(h1)(i, j) + b * t.value(h2)(i, j)).epsilon(1e-9));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < cfg.model_dim; ++j)
      CHECK(t.value(s_mix)(i, j) ==
            doctest::Approx(a * t.value(s1)(i, j) + b * t.value(s2)(i, j)).epsilon(1e-9));
}

TEST_CASE("gradients flow through both projections") {
  Config cfg = small_config();
  ParameterStore store = make_parameter_store(cfg);
  Rng rng(29);
  Matrix u = testutil::random_matrix(5, cfg.embed_dim, rng);
  auto result = testutil::max_fd_error(store, [&](ParameterStore& s, bool backward) {
    Tape t;
    ParamVars params = make_param_vars(t, s);
    Var uc = t.constant(u);
    Var h = project_tokens(t, uc, params);
    Var spans = span_reprs(t, uc, {{0, 1}, {2, 4}, {3, 3}}, params);
    Var loss = t.add(t.sum(t.log(t.row_softmax(h))), t.sum(t.relu(spans)));
    if (backward) t.backward(loss);
    return t.value(loss).scalar();
  });
  INFO("worst parameter: ", result.worst_param);
  CHECK(result.max_rel_err < 1e-4);
}

TEST_SUITE_END();

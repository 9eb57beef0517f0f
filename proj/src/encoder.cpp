#include "cdap/encoder.hpp"

#include <fstream>
#include <sstream>

#include "cdap/rng.hpp"

namespace cdap {

Matrix HashedRandomProvider::embed(const std::vector<std::string>& tokens) const {
  Matrix u(int(tokens.size()), dim_);
  for (size_t i = 0; i < tokens.size(); ++i) {
    Rng rng(stable_token_hash(tokens[i], seed_));
    double* row = u.row_ptr(int(i));
    for (int j = 0; j < dim_; ++j) row[j] = rng.uniform(-1.0, 1.0);
  }
  return u;
}

PretrainedProvider::PretrainedProvider(const std::string& path, int dim, std::uint64_t seed)
    : dim_(dim), fallback_(dim, seed) {
  std::ifstream in(path);
  if (!in) throw CdapError("cannot read embeddings: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::vector<double> vec(dim);
    for (int j = 0; j < dim; ++j)
      if (!(ls >> vec[j]))
        throw ParseError("embedding line needs " + std::to_string(dim) + " values", line_no);
    double extra;
    if (ls >> extra)
      throw ParseError("embedding line has more than " + std::to_string(dim) + " values", line_no);
    table_[word] = std::move(vec);
  }
}

Matrix PretrainedProvider::embed(const std::vector<std::string>& tokens) const {
  Matrix u(int(tokens.size()), dim_);
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto it = table_.find(tokens[i]);
    if (it != table_.end()) {
      std::copy(it->second.begin(), it->second.end(), u.row_ptr(int(i)));
    } else {
      Matrix fb = fallback_.embed({tokens[i]});
      std::copy(fb.row_ptr(0), fb.row_ptr(0) + dim_, u.row_ptr(int(i)));
    }
  }
  return u;
}

std::unique_ptr<EmbeddingProvider> make_provider(const Config& config) {
  if (config.provider == ProviderKind::pretrained) {
    if (config.pretrained_path.empty())
      throw ValidationError("provider=pretrained requires pretrained_path");
    return std::make_unique<PretrainedProvider>(config.pretrained_path, config.embed_dim,
                                                config.seed);
  }
  return std::make_unique<HashedRandomProvider>(config.embed_dim, config.seed);
}

ParameterStore make_parameter_store(const Config& config) {
  const int d1 = config.embed_dim;
  const int d = config.model_dim;
  const int hidden = 2 * d;
  ParameterStore store;
  using namespace param_names;
  store.add(token_w, d, d1);
  store.add(token_b, 1, d, ParamInit::uniform_fan_in, d1);
  store.add(span_w, d, 2 * d1);
  store.add(span_b, 1, d, ParamInit::uniform_fan_in, 2 * d1);
  store.add(ffn1_w, hidden, d);
  store.add(ffn1_b, 1, hidden, ParamInit::uniform_fan_in, d);
  store.add(ffn2_w, d, hidden);
  store.add(ffn2_b, 1, d, ParamInit::uniform_fan_in, hidden);
  store.add(norm_gain, 1, d, ParamInit::ones);
  store.add(norm_bias, 1, d, ParamInit::zeros);
  store.init(config.seed);
  return store;
}

ParamVars make_param_vars(Tape& tape, ParameterStore& store) {
  using namespace param_names;
  auto leaf = [&](const char* name) {
    Param& p = store.at(name);
    return tape.parameter(p.value, &p.grad);
  };
  ParamVars v;
  v.token_w = leaf(token_w);
  v.token_b = leaf(token_b);
  v.span_w = leaf(span_w);
  v.span_b = leaf(span_b);
  v.ffn1_w = leaf(ffn1_w);
  v.ffn1_b = leaf(ffn1_b);
  v.ffn2_w = leaf(ffn2_w);
  v.ffn2_b = leaf(ffn2_b);
  v.norm_gain = leaf(norm_gain);
  v.norm_bias = leaf(norm_bias);
  return v;
}

Var project_tokens(Tape& tape, Var u, const ParamVars& params) {
  return tape.add_row_broadcast(tape.matmul_nt(u, params.token_w), params.token_b);
}

Var span_reprs(Tape& tape, Var u, const std::vector<Span>& spans, const ParamVars& params) {
  if (spans.empty()) throw ContractError("span_reprs: no spans");
  int n = tape.value(u).rows();
  std::vector<int> starts, ends;
  starts.reserve(spans.size());
  ends.reserve(spans.size());
  for (const Span& s : spans) {
    if (s.start < 0 || s.start > s.end || s.end >= n)
      throw ContractError("span_reprs: span out of range");
    starts.push_back(s.start);
    ends.push_back(s.end);
  }
  Var boundary = tape.concat_cols(
      {tape.gather_rows(u, std::move(starts)), tape.gather_rows(u, std::move(ends))});
  return tape.add_row_broadcast(tape.matmul_nt(boundary, params.span_w), params.span_b);
}

}  // namespace cdap

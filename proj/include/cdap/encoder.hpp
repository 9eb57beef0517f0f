#pragma once

#include <memory>
#include <string>
#include <vector>

#include "cdap/config.hpp"
#include "cdap/data_model.hpp"
#include "cdap/matrix.hpp"
#include "cdap/params.hpp"
#include "cdap/tape.hpp"

namespace cdap {

// Source of token representations U (one row per token). Implementations are
// deterministic: the same token string always gets the same row.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual int dim() const = 0;
  virtual Matrix embed(const std::vector<std::string>& tokens) const = 0;
};

// Seeded pseudo-random vector per token string, uniform in [-1, 1].
class HashedRandomProvider : public EmbeddingProvider {
 public:
  HashedRandomProvider(int dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}
  int dim() const override { return dim_; }
  Matrix embed(const std::vector<std::string>& tokens) const override;

 private:
  int dim_;
  std::uint64_t seed_;
};

// Text file with `word v1 ... v_dim` per line. Out-of-vocabulary tokens fall
// back to the hashed vector for the same string.
class PretrainedProvider : public EmbeddingProvider {
 public:
  PretrainedProvider(const std::string& path, int dim, std::uint64_t seed);
  int dim() const override { return dim_; }
  Matrix embed(const std::vector<std::string>& tokens) const override;

 private:
  int dim_;
  HashedRandomProvider fallback_;
  std::map<std::string, std::vector<double>> table_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const Config& config);

// Names of the trainable tensors, grouped here so the store layout has a
// single owner.
namespace param_names {
inline constexpr const char* token_w = "token_proj.weight";
inline constexpr const char* token_b = "token_proj.bias";
inline constexpr const char* span_w = "span_proj.weight";
inline constexpr const char* span_b = "span_proj.bias";
inline constexpr const char* ffn1_w = "cross_attn.ffn1.weight";
inline constexpr const char* ffn1_b = "cross_attn.ffn1.bias";
inline constexpr const char* ffn2_w = "cross_attn.ffn2.weight";
inline constexpr const char* ffn2_b = "cross_attn.ffn2.bias";
inline constexpr const char* norm_gain = "cross_attn.norm.gain";
inline constexpr const char* norm_bias = "cross_attn.norm.bias";
}  // namespace param_names

// Creates all trainable tensors for the given dims and draws the seeded init.
ParameterStore make_parameter_store(const Config& config);

// Parameter leaves registered on one tape for one forward/backward flow.
struct ParamVars {
  Var token_w, token_b, span_w, span_b;
  Var ffn1_w, ffn1_b, ffn2_w, ffn2_b, norm_gain, norm_bias;
};
ParamVars make_param_vars(Tape& tape, ParameterStore& store);

// H = U W_t^T + b_t, one row per token.
Var project_tokens(Tape& tape, Var u, const ParamVars& params);

// Span rows W_s [u_start (+) u_end] + b_s for every candidate, stacked in
// candidate order.
Var span_reprs(Tape& tape, Var u, const std::vector<Span>& spans, const ParamVars& params);

}  // namespace cdap

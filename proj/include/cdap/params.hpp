#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdap/matrix.hpp"
#include "cdap/tape.hpp"

namespace cdap {

// Two learning-rate groups: the (possibly empty) embedding group and
// everything else.
enum class ParamGroup { model, embedding };

enum class ParamInit { uniform_fan_in, ones, zeros };

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix moment1;
  Matrix moment2;
  ParamGroup group = ParamGroup::model;
  int fan_in = 0;  // used by uniform init
};

// All trainable tensors with their gradient slots and Adam moment buffers.
class ParameterStore {
 public:
  Param& add(const std::string& name, int rows, int cols,
             ParamInit init = ParamInit::uniform_fan_in,
             std::optional<int> fan_in = std::nullopt,
             ParamGroup group = ParamGroup::model);
  Param& at(const std::string& name);
  const Param& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }

  void zero_grads();
  // Draws every uniform_fan_in parameter from U[-1/sqrt(fan_in), 1/sqrt(fan_in)].
  void init(std::uint64_t seed);

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t s) { step_ = s; }

  // Registers every parameter as a tape leaf; gradients land back in the store.
  std::vector<Var> tape_leaves(Tape& tape);

 private:
  std::vector<Param> params_;
  std::map<std::string, int> index_;
  std::int64_t step_ = 0;
};

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;  // decoupled
};

// One AdamW update. embedding_lr, when set, applies to the embedding group;
// otherwise lr is used for every parameter. Increments the step counter and
// clears gradients. Throws DivergenceError on non-finite gradients.
void adam_step(ParameterStore& store, double lr,
               std::optional<double> embedding_lr = std::nullopt,
               const AdamOptions& opts = {});

// Linear warmup from 0 to peak over warmup_steps, then linear decay to 0 at
// total_steps.
double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps,
             std::int64_t total_steps);

// Versioned text checkpoint: a meta key/value section followed by each
// parameter's shape and row-major values. Doubles are printed with enough
// digits to round-trip exactly.
void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& meta);

struct Checkpoint {
  std::map<std::string, std::string> meta;
  ParameterStore store;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace cdap

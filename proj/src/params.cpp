#include "cdap/params.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cdap/error.hpp"
#include "cdap/rng.hpp"

namespace cdap {

Param& ParameterStore::add(const std::string& name, int rows, int cols, ParamInit init,
                           std::optional<int> fan_in, ParamGroup group) {
  if (index_.count(name)) throw ContractError("ParameterStore: duplicate parameter " + name);
  Param p;
  p.name = name;
  p.value = init == ParamInit::ones ? Matrix::full(rows, cols, 1.0) : Matrix(rows, cols);
  p.grad = Matrix(rows, cols);
  p.moment1 = Matrix(rows, cols);
  p.moment2 = Matrix(rows, cols);
  p.group = group;
  p.fan_in = init == ParamInit::uniform_fan_in ? fan_in.value_or(cols) : 0;
  index_[name] = int(params_.size());
  params_.push_back(std::move(p));
  return params_.back();
}

Param& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParameterStore: unknown parameter " + name);
  return params_[it->second];
}

const Param& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ContractError("ParameterStore: unknown parameter " + name);
  return params_[it->second];
}

bool ParameterStore::contains(const std::string& name) const { return index_.count(name) > 0; }

void ParameterStore::zero_grads() {
  for (auto& p : params_) p.grad.fill(0.0);
}

void ParameterStore::init(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : params_) {
    if (p.fan_in <= 0) continue;
    double bound = 1.0 / std::sqrt(double(p.fan_in));
    for (size_t i = 0; i < p.value.size(); ++i)
      p.value.data()[i] = rng.uniform(-bound, bound);
  }
}

std::vector<Var> ParameterStore::tape_leaves(Tape& tape) {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (auto& p : params_) vars.push_back(tape.parameter(p.value, &p.grad));
  return vars;
}

void adam_step(ParameterStore& store, double lr, std::optional<double> embedding_lr,
               const AdamOptions& opts) {
  std::int64_t t = store.step() + 1;
  double bc1 = 1.0 - std::pow(opts.beta1, double(t));
  double bc2 = 1.0 - std::pow(opts.beta2, double(t));
  for (auto& p : store.params()) {
    if (!p.grad.all_finite())
      throw DivergenceError("adam_step: non-finite gradient in " + p.name);
    double plr = (p.group == ParamGroup::embedding && embedding_lr) ? *embedding_lr : lr;
    for (size_t i = 0; i < p.value.size(); ++i) {
      double g = p.grad.data()[i];
      double& m = p.moment1.data()[i];
      double& v = p.moment2.data()[i];
      m = opts.beta1 * m + (1.0 - opts.beta1) * g;
      v = opts.beta2 * v + (1.0 - opts.beta2) * g * g;
      double mhat = m / bc1;
      double vhat = v / bc2;
      double& w = p.value.data()[i];
      w -= plr * (mhat / (std::sqrt(vhat) + opts.eps) + opts.weight_decay * w);
    }
  }
  store.set_step(t);
  store.zero_grads();
}

double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps,
             std::int64_t total_steps) {
  if (step < 0 || step > total_steps || warmup_steps > total_steps)
    throw ContractError("lr_at: step/warmup outside [0, total_steps]");
  if (warmup_steps > 0 && step < warmup_steps)
    return peak_lr * double(step) / double(warmup_steps);
  if (total_steps == warmup_steps) return step == total_steps ? 0.0 : peak_lr;
  return peak_lr * double(total_steps - step) / double(total_steps - warmup_steps);
}

namespace {

constexpr const char* kMagic = "cdap-checkpoint v1";

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParameterStore& store,
                     const std::map<std::string, std::string>& meta) {
  std::ofstream out(path);
  if (!out) throw CdapError("cannot write checkpoint: " + path);
  out << kMagic << "\n";
  out << "step " << store.step() << "\n";
  for (const auto& [k, v] : meta) out << "meta " << k << " " << v << "\n";
  for (const auto& p : store.params()) {
    out << "param " << p.name << " " << p.value.rows() << " " << p.value.cols() << " "
        << (p.group == ParamGroup::embedding ? "embedding" : "model") << "\n";
    const Matrix* mats[3] = {&p.value, &p.moment1, &p.moment2};
    for (const Matrix* m : mats) {
      for (size_t i = 0; i < m->size(); ++i)
        out << fmt_double(m->data()[i]) << (i + 1 == m->size() ? "" : " ");
      out << "\n";
    }
  }
  if (!out) throw CdapError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CdapError("cannot read checkpoint: " + path);
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line) || line != kMagic)
    throw ParseError("not a cdap checkpoint: " + path, 1);
  Checkpoint ck;
  auto read_values = [&](Matrix& m) {
    if (!std::getline(in, line)) throw ParseError("checkpoint truncated", line_no);
    ++line_no;
    std::istringstream vs(line);
    for (size_t i = 0; i < m.size(); ++i)
      if (!(vs >> m.data()[i])) throw ParseError("bad checkpoint values", line_no - 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "step") {
      std::int64_t s;
      if (!(ls >> s)) throw ParseError("bad step line", line_no);
      ck.store.set_step(s);
    } else if (tag == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      ck.meta[key] = value;
    } else if (tag == "param") {
      std::string name, group;
      int rows, cols;
      if (!(ls >> name >> rows >> cols >> group))
        throw ParseError("bad param header", line_no);
      Param& p = ck.store.add(name, rows, cols, ParamInit::zeros, std::nullopt,
                              group == "embedding" ? ParamGroup::embedding : ParamGroup::model);
      read_values(p.value);
      read_values(p.moment1);
      read_values(p.moment2);
    } else {
      throw ParseError("unknown checkpoint record '" + tag + "'", line_no);
    }
  }
  return ck;
}

}  // namespace cdap

#pragma once
// SGD and Adam with linear learning-rate warmup. Parameters are visited in
// sorted name order, so updates are deterministic.

#include <cmath>
#include <map>
#include <string>

#include "pathmind/params.hpp"

namespace pathmind {

enum class OptimKind { kSgd, kAdam };

struct OptimConfig {
  OptimKind kind = OptimKind::kAdam;
  double learning_rate = 2e-5;
  double warmup_ratio = 0.03;
  size_t total_steps = 0;  // 0 disables warmup
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class OptimState {
 public:
  explicit OptimState(OptimConfig cfg) : cfg_(cfg) {
    if (cfg_.learning_rate < 0.0) throw Error("optimizer: learning rate must be non-negative");
    if (cfg_.warmup_ratio < 0.0 || cfg_.warmup_ratio > 1.0)
      throw Error("optimizer: warmup ratio must be in [0, 1]");
  }

  const OptimConfig& config() const { return cfg_; }
  size_t step_count() const { return step_; }

  // Linear ramp over the first warmup_ratio * total_steps updates.
  double effective_lr(size_t step) const {
    size_t warmup_steps = size_t(std::llround(cfg_.warmup_ratio * double(cfg_.total_steps)));
    if (warmup_steps == 0 || step >= warmup_steps) return cfg_.learning_rate;
    return cfg_.learning_rate * double(step) / double(warmup_steps);
  }

  // Applies one update from the accumulated gradients, then zeroes them.
  void step(ParamStore& params) {
    if (!params.has_grads()) throw Error("optimizer: step before any backward pass");
    ++step_;
    double lr = effective_lr(step_);
    for (auto& [name, p] : params.parameters()) {
      const Tensor& g = params.grad(name);
      switch (cfg_.kind) {
        case OptimKind::kSgd:
          for (size_t i = 0; i < p.size(); ++i) p.data[i] -= lr * g.data[i];
          break;
        case OptimKind::kAdam: {
          Tensor& m = moment(m1_, name, p.shape);
          Tensor& v = moment(m2_, name, p.shape);
          double bc1 = 1.0 - std::pow(cfg_.beta1, double(step_));
          double bc2 = 1.0 - std::pow(cfg_.beta2, double(step_));
          for (size_t i = 0; i < p.size(); ++i) {
            m.data[i] = cfg_.beta1 * m.data[i] + (1.0 - cfg_.beta1) * g.data[i];
            v.data[i] = cfg_.beta2 * v.data[i] + (1.0 - cfg_.beta2) * g.data[i] * g.data[i];
            double mhat = m.data[i] / bc1;
            double vhat = v.data[i] / bc2;
            p.data[i] -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
          }
          break;
        }
      }
    }
    params.zero_grads();
  }

 private:
  static Tensor& moment(std::map<std::string, Tensor>& store, const std::string& name,
                        const std::vector<size_t>& shape) {
    auto it = store.find(name);
    if (it == store.end()) it = store.emplace(name, Tensor(shape)).first;
    return it->second;
  }

  OptimConfig cfg_;
  size_t step_ = 0;
  std::map<std::string, Tensor> m1_;
  std::map<std::string, Tensor> m2_;
};

}  // namespace pathmind

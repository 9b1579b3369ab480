#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aop/autodiff/param_store.hpp"

namespace aop::autodiff {

// Learning-rate schedule.
//   constant:           rate(step) = base
//   inverse_sqrt_warmup: rate(step) = base * min(step / warmup, sqrt(warmup / step))
// The warm-up form is the Transformer schedule rescaled so that its peak,
// reached at step == warmup, equals `base`.
struct Schedule {
  enum class Kind { constant, inverse_sqrt_warmup };
  Kind kind = Kind::constant;
  double base = 1e-3;
  std::size_t warmup = 400;

  double rate(std::size_t step) const;  // step counts from 1

  static Schedule parse(const std::string& name, double base, std::size_t warmup);
  std::string name() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double max_grad_norm = 0.0;  // <= 0 disables clipping
};

// Adam with first/second moment state per parameter.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update with learning rate `lr` to every parameter that has a
  // gradient buffer. Throws ContractError when no parameter has one.
  // Returns the pre-clipping global gradient norm.
  double step(ParamStore& store, double lr);

  std::size_t steps_taken() const { return t_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Advances `adam` one step using the schedule's rate for the next step index.
double optimizer_step(ParamStore& store, Adam& adam, const Schedule& schedule);

}  // namespace aop::autodiff

#include "aop/autodiff/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "aop/errors.hpp"

namespace aop::autodiff {

double Schedule::rate(std::size_t step) const {
  if (step == 0) step = 1;
  if (kind == Kind::constant) return base;
  const double s = static_cast<double>(step);
  const double w = static_cast<double>(std::max<std::size_t>(warmup, 1));
  return base * std::min(s / w, std::sqrt(w / s));
}

Schedule Schedule::parse(const std::string& name, double base, std::size_t warmup) {
  Schedule s;
  s.base = base;
  s.warmup = warmup;
  if (name == "constant") {
    s.kind = Kind::constant;
  } else if (name == "warmup" || name == "inverse_sqrt_warmup" || name == "noam") {
    s.kind = Kind::inverse_sqrt_warmup;
  } else {
    throw ContractError("unknown learning-rate schedule: " + name);
  }
  return s;
}

std::string Schedule::name() const { return kind == Kind::constant ? "constant" : "warmup"; }

double Adam::step(ParamStore& store, double lr) {
  const auto& entries = store.entries();
  if (m_.size() != entries.size()) {
    m_.resize(entries.size());
    v_.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      m_[i].assign(entries[i].second.size(), 0.0);
      v_[i].assign(entries[i].second.size(), 0.0);
    }
  }

  bool any = false;
  double sq = 0.0;
  for (const auto& [_, t] : entries) {
    if (!t.has_grad()) continue;
    any = true;
    for (double g : t.grad()) sq += g * g;
  }
  if (!any) throw ContractError("optimizer step without gradients");
  const double norm = std::sqrt(sq);
  const double clip = (cfg_.max_grad_norm > 0 && norm > cfg_.max_grad_norm) ? cfg_.max_grad_norm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor t = entries[i].second;
    if (!t.has_grad()) continue;
    auto w = t.mutable_data();
    auto g = t.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t e = 0; e < w.size(); ++e) {
      const double ge = g[e] * clip;
      m[e] = cfg_.beta1 * m[e] + (1.0 - cfg_.beta1) * ge;
      v[e] = cfg_.beta2 * v[e] + (1.0 - cfg_.beta2) * ge * ge;
      w[e] -= lr * (m[e] / bc1) / (std::sqrt(v[e] / bc2) + cfg_.eps);
    }
  }
  return norm;
}

double optimizer_step(ParamStore& store, Adam& adam, const Schedule& schedule) {
  return adam.step(store, schedule.rate(adam.steps_taken() + 1));
}

}  // namespace aop::autodiff

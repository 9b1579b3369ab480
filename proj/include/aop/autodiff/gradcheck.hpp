#pragma once

// Central finite-difference gradient oracle. It perturbs raw
// parameter values and re-runs a caller-supplied forward, so it shares no code
// with the reverse-mode sweep it checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "aop/autodiff/tensor.hpp"

namespace aop::autodiff {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "name[index]" of the worst element
  std::size_t checked = 0;
};

// Relative error with a floor on the denominator so that two gradients that
// are both essentially zero compare as equal.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// `loss` must rebuild the graph from the current parameter values and return a
// scalar. Analytic gradients are read from each tensor's grad buffer, which the
// caller populates (one backward) beforehand. `five_point` uses the
// fourth-order stencil (f(-2h) - 8f(-h) + 8f(h) - f(2h)) / 12h.
inline GradCheckResult check_gradients(const std::vector<std::pair<std::string, Tensor>>& params,
                                       const std::function<double()>& loss, double step = 1e-5,
                                       std::size_t max_per_tensor = 0, bool five_point = false) {
  GradCheckResult result;
  for (const auto& [name, tensor] : params) {
    Tensor t = tensor;
    auto values = t.mutable_data();
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (analytic.empty()) analytic.assign(values.size(), 0.0);
    const std::size_t n = max_per_tensor ? std::min(max_per_tensor, values.size()) : values.size();
    const std::size_t stride = std::max<std::size_t>(1, values.size() / std::max<std::size_t>(n, 1));
    for (std::size_t k = 0, i = 0; k < n && i < values.size(); ++k, i += stride) {
      const double orig = values[i];
      auto at = [&](double offset) {
        values[i] = orig + offset;
        return loss();
      };
      const double numeric = five_point
                                 ? (at(-2 * step) - 8 * at(-step) + 8 * at(step) - at(2 * step)) / (12.0 * step)
                                 : (at(step) - at(-step)) / (2.0 * step);
      values[i] = orig;
      const double err = relative_error(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst = name + "[" + std::to_string(i) + "] analytic=" + std::to_string(analytic[i]) +
                       " numeric=" + std::to_string(numeric);
      }
    }
  }
  return result;
}

}  // namespace aop::autodiff

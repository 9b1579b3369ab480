#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aop/autodiff/param_store.hpp"
#include "aop/autodiff/tensor.hpp"
#include "aop/rng.hpp"

namespace aop::experts {

using autodiff::ParamStore;
using autodiff::Tensor;

// Gated recurrent unit:
//   z = sigmoid(x Wz + h Uz + bz)
//   r = sigmoid(x Wr + h Ur + br)
//   c = tanh(x Wh + (r * h) Uh + bh)
//   h' = (1 - z) * h + z * c
struct GruWeights {
  Tensor wz, uz, bz;
  Tensor wr, ur, br;
  Tensor wh, uh, bh;

  std::size_t hidden() const { return uz.rows(); }
};

GruWeights make_gru(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng);

// Runs the GRU over the rows of `x` starting from `h0` ([1 x hidden]; zeros
// when undefined) and returns every hidden state as the rows of [n x hidden].
Tensor gru_scan(const GruWeights& w, const Tensor& x, const Tensor& h0 = Tensor());

}  // namespace aop::experts

#include "aop/experts/gru.hpp"

#include "aop/autodiff/ops.hpp"
#include "aop/errors.hpp"

namespace aop::experts {

namespace ad = aop::autodiff;

GruWeights make_gru(ParamStore& store, const std::string& prefix, std::size_t input, std::size_t hidden, Rng& rng) {
  GruWeights w;
  w.wz = store.glorot(prefix + ".wz", {input, hidden}, rng);
  w.uz = store.glorot(prefix + ".uz", {hidden, hidden}, rng);
  w.bz = store.zeros(prefix + ".bz", {hidden});
  w.wr = store.glorot(prefix + ".wr", {input, hidden}, rng);
  w.ur = store.glorot(prefix + ".ur", {hidden, hidden}, rng);
  w.br = store.zeros(prefix + ".br", {hidden});
  w.wh = store.glorot(prefix + ".wh", {input, hidden}, rng);
  w.uh = store.glorot(prefix + ".uh", {hidden, hidden}, rng);
  w.bh = store.zeros(prefix + ".bh", {hidden});
  return w;
}

Tensor gru_scan(const GruWeights& w, const Tensor& x, const Tensor& h0) {
  const std::size_t n = x.rows(), hidden = w.hidden();
  if (n == 0) throw ContractError("GRU over an empty sequence");
  if (x.cols() != w.wz.rows()) throw DimensionError("GRU input width differs from its weights");
  // input projections for all steps at once
  const Tensor xz = ad::add_row(ad::matmul(x, w.wz), w.bz);
  const Tensor xr = ad::add_row(ad::matmul(x, w.wr), w.br);
  const Tensor xh = ad::add_row(ad::matmul(x, w.wh), w.bh);

  Tensor h = h0.defined() ? h0 : Tensor::zeros({1, hidden});
  if (h.size() != hidden) throw DimensionError("GRU initial state has the wrong width");
  if (h.rank() != 2) h = ad::reshape(h, {1, hidden});
  // both gates share one recurrent product per step
  const Tensor u_gates = ad::concat_cols({w.uz, w.ur});
  std::vector<Tensor> states;
  states.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Tensor hu = ad::matmul(h, u_gates);
    const Tensor z = ad::sigmoid(ad::add(ad::row(xz, t), ad::slice_cols(hu, 0, hidden)));
    const Tensor r = ad::sigmoid(ad::add(ad::row(xr, t), ad::slice_cols(hu, hidden, 2 * hidden)));
    const Tensor c = ad::tanh(ad::add(ad::row(xh, t), ad::matmul(ad::mul(r, h), w.uh)));
    h = ad::add(ad::mul(ad::one_minus(z), h), ad::mul(z, c));
    states.push_back(h);
  }
  return states.size() == 1 ? states.front() : ad::concat_rows(states);
}

}  // namespace aop::experts

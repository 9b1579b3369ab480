#include <array>
#include <vector>

#include "aop/autodiff/kernels.hpp"
#include "aop/autodiff/op_counter.hpp"
#include "aop/rng.hpp"
#include "doctest.h"

namespace kn = aop::kernels;

namespace {
std::vector<double> random_vec(std::size_t n, aop::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}
}  // namespace

TEST_CASE("serial gemm matches hand arithmetic") {
  const std::vector<double> a = {1, 2, 3, 4};
  const std::vector<double> b = {1, 1};
  std::vector<double> c(2);
  kn::serial::gemm_nn(a, b, c, 2, 2, 1, false);
  CHECK(c[0] == 3.0);
  CHECK(c[1] == 7.0);

  // a * a^T and a^T * a through the transposed variants
  std::vector<double> nt(4), tn(4);
  kn::serial::gemm_nt(a, a, nt, 2, 2, 2, false);
  CHECK(nt == std::vector<double>{5, 11, 11, 25});
  kn::serial::gemm_tn(a, a, tn, 2, 2, 2, false);
  CHECK(tn == std::vector<double>{10, 14, 14, 20});
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  aop::Rng rng(11);
  using Dims = std::array<std::size_t, 3>;
  for (const Dims& d : {Dims{1, 1, 1}, Dims{7, 5, 3}, Dims{64, 33, 17}, Dims{128, 96, 80}}) {
    const auto [m, k, n] = d;
    const auto a = random_vec(m * k, rng);
    const auto b = random_vec(k * n, rng);
    const auto bt = random_vec(n * k, rng);
    const auto at = random_vec(k * m, rng);
    std::vector<double> s(m * n, 0.5), p(m * n, 0.5);

    kn::serial::gemm_nn(a, b, s, m, k, n, true);
    kn::parallel::gemm_nn(a, b, p, m, k, n, true);
    CHECK(s == p);

    kn::serial::gemm_nt(a, bt, s, m, k, n, false);
    kn::parallel::gemm_nt(a, bt, p, m, k, n, false);
    CHECK(s == p);

    kn::serial::gemm_tn(at, b, s, m, k, n, false);
    kn::parallel::gemm_tn(at, b, p, m, k, n, false);
    CHECK(s == p);

    std::vector<double> ys(m * n), yp(m * n);
    kn::serial::softmax_rows(s, ys, m, n);
    kn::parallel::softmax_rows(s, yp, m, n);
    CHECK(ys == yp);
  }

  std::vector<std::vector<double>> items;
  for (int i = 0; i < 5; ++i) items.push_back(random_vec(1000, rng));
  std::vector<const double*> ptrs;
  for (auto& v : items) ptrs.push_back(v.data());
  const auto w = random_vec(5, rng);
  std::vector<double> ws(1000), wp(1000);
  kn::serial::weighted_sum(ptrs, w, ws);
  kn::parallel::weighted_sum(ptrs, w, wp);
  CHECK(ws == wp);
}

TEST_CASE("dispatch counts multiply-adds and respects force_serial") {
  aop::Rng rng(3);
  const auto a = random_vec(6 * 4, rng);
  const auto b = random_vec(4 * 5, rng);
  std::vector<double> c(30), ref(30);
  aop::autodiff::OpCounter counter;
  {
    aop::autodiff::CounterScope scope(counter);
    kn::set_force_serial(true);
    kn::gemm_nn(a, b, c, 6, 4, 5);
    kn::set_force_serial(false);
  }
  kn::serial::gemm_nn(a, b, ref, 6, 4, 5, false);
  CHECK(c == ref);
  CHECK(counter.multiply_adds == 6 * 4 * 5);
  // no scope active: nothing recorded
  kn::gemm_nn(a, b, c, 6, 4, 5);
  CHECK(counter.multiply_adds == 6 * 4 * 5);
}

TEST_CASE("softmax rows stay finite for large inputs") {
  const std::vector<double> x = {1000.0, 0.0};
  std::vector<double> y(2);
  kn::serial::softmax_rows(x, y, 1, 2);
  CHECK(y[0] == 1.0);
  CHECK(y[1] >= 0.0);
  CHECK(y[1] < 1e-300);
}

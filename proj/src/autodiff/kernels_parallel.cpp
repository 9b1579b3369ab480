#include "aop/autodiff/kernels.hpp"

#include <algorithm>
#include <cmath>

// Same loop bodies as the serial kernels; only the outer loop is split
// across threads, so per-element accumulation order is unchanged.

namespace aop::kernels::parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < rows; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    const double* ai = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < rows; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    const double* ai = a.data() + i * k;
    double* ci = c.data() + i * n;
    detail::gemm_nt_row(ai, b.data(), ci, k, n, accumulate);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  const long rows = static_cast<long>(m);
#pragma omp parallel for schedule(static)
  for (long ii = 0; ii < rows; ++ii) {
    const std::size_t i = static_cast<std::size_t>(ii);
    double* ci = c.data() + i * n;
    if (!accumulate) std::fill(ci, ci + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double api = a[p * m + i];
      const double* bp = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
}

void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols) {
  const long nrows = static_cast<long>(rows);
#pragma omp parallel for schedule(static)
  for (long rr = 0; rr < nrows; ++rr) {
    const std::size_t r = static_cast<std::size_t>(rr);
    const double* xr = x.data() + r * cols;
    double* yr = y.data() + r * cols;
    const double mx = *std::max_element(xr, xr + cols);
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const double inv = 1.0 / sum;
    for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

void weighted_sum(std::span<const double* const> xs, std::span<const double> w, std::span<double> y) {
  if (xs.empty()) {
    std::fill(y.begin(), y.end(), 0.0);
    return;
  }
  const long len = static_cast<long>(y.size());
#pragma omp parallel for schedule(static)
  for (long ee = 0; ee < len; ++ee) {
    const std::size_t e = static_cast<std::size_t>(ee);
    double s = w[0] * xs[0][e];
    for (std::size_t i = 1; i < xs.size(); ++i) s += w[i] * xs[i][e];
    y[e] = s;
  }
}

}  // namespace aop::kernels::parallel

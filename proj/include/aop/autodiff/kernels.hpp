#pragma once

#include <cstddef>
#include <span>

// Dense float64 kernels behind the tensor ops.
//
// `serial` is the reference implementation and is kept for testing. `parallel`
// distributes output rows across OpenMP threads. Both accumulate every output
// element in the same order, so their results are bit-identical; the dispatch
// functions at namespace scope pick one by problem size.
//
// All matrices are row-major. `accumulate` adds into `c` instead of
// overwriting it.
namespace aop::kernels {

namespace detail {
// One output row of a * b^T. Four columns run at once as independent sums;
// each still adds its products in order p = 0..k-1.
inline void gemm_nt_row(const double* ai, const double* b, double* ci, std::size_t k, std::size_t n,
                        bool accumulate) {
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const double* b0 = b + j * k;
    const double* b1 = b0 + k;
    const double* b2 = b1 + k;
    const double* b3 = b2 + k;
    double s0 = accumulate ? ci[j] : 0.0, s1 = accumulate ? ci[j + 1] : 0.0;
    double s2 = accumulate ? ci[j + 2] : 0.0, s3 = accumulate ? ci[j + 3] : 0.0;
    for (std::size_t p = 0; p < k; ++p) {
      const double x = ai[p];
      s0 += x * b0[p];
      s1 += x * b1[p];
      s2 += x * b2[p];
      s3 += x * b3[p];
    }
    ci[j] = s0;
    ci[j + 1] = s1;
    ci[j + 2] = s2;
    ci[j + 3] = s3;
  }
  for (; j < n; ++j) {
    const double* bj = b + j * k;
    double s = accumulate ? ci[j] : 0.0;
    for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
    ci[j] = s;
  }
}
}  // namespace detail

namespace serial {
// c[m x n] (+)= a[m x k] * b[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// c[m x n] (+)= a[m x k] * b[n x k]^T
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// c[m x n] (+)= a[k x m]^T * b[k x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
// Row-wise max-shifted softmax of x[rows x cols].
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
// y = sum_i w[i] * x_i, all of length `len`.
void weighted_sum(std::span<const double* const> xs, std::span<const double> w, std::span<double> y);
}  // namespace serial

namespace parallel {
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate);
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
void weighted_sum(std::span<const double* const> xs, std::span<const double> w, std::span<double> y);
}  // namespace parallel

// Problems with at least this many multiply-adds go to the parallel kernels.
// Below it, thread start-up costs more than it saves.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 18;

// Forces the serial path everywhere (benchmarks pin to one thread this way).
void set_force_serial(bool on);
bool force_serial();

// Number of OpenMP threads available (1 when built without OpenMP).
int max_threads();

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate = false);
void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols);
void weighted_sum(std::span<const double* const> xs, std::span<const double> w, std::span<double> y);

}  // namespace aop::kernels

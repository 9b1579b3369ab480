#include "aop/autodiff/kernels.hpp"

#include <atomic>

#include "aop/autodiff/op_counter.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace aop::kernels {

namespace {
std::atomic<bool> g_force_serial{false};

bool use_parallel(std::size_t work) {
  return !g_force_serial.load(std::memory_order_relaxed) && work >= kParallelThreshold &&
         max_threads() > 1;
}
}  // namespace

void set_force_serial(bool on) { g_force_serial.store(on, std::memory_order_relaxed); }
bool force_serial() { return g_force_serial.load(std::memory_order_relaxed); }

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  autodiff::count_multiply_adds(m * k * n);
  if (use_parallel(m * k * n)) {
    parallel::gemm_nn(a, b, c, m, k, n, accumulate);
  } else {
    serial::gemm_nn(a, b, c, m, k, n, accumulate);
  }
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  autodiff::count_multiply_adds(m * k * n);
  if (use_parallel(m * k * n)) {
    parallel::gemm_nt(a, b, c, m, k, n, accumulate);
  } else {
    serial::gemm_nt(a, b, c, m, k, n, accumulate);
  }
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n, bool accumulate) {
  autodiff::count_multiply_adds(m * k * n);
  if (use_parallel(m * k * n)) {
    parallel::gemm_tn(a, b, c, m, k, n, accumulate);
  } else {
    serial::gemm_tn(a, b, c, m, k, n, accumulate);
  }
}

void softmax_rows(std::span<const double> x, std::span<double> y, std::size_t rows, std::size_t cols) {
  if (use_parallel(rows * cols * 16)) {
    parallel::softmax_rows(x, y, rows, cols);
  } else {
    serial::softmax_rows(x, y, rows, cols);
  }
}

void weighted_sum(std::span<const double* const> xs, std::span<const double> w, std::span<double> y) {
  if (use_parallel(xs.size() * y.size())) {
    parallel::weighted_sum(xs, w, y);
  } else {
    serial::weighted_sum(xs, w, y);
  }
}

}  // namespace aop::kernels

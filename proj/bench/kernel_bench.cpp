// Serial reference kernels against their OpenMP counterparts, plus the
// AoP vs AoR forward timing at desk size.

#include <algorithm>
#include <chrono>
#include <cstring>
#include <functional>
#include <iomanip>
#include <iostream>
#include <vector>

#include "CLI11.hpp"
#include "aop/autodiff/kernels.hpp"
#include "aop/costbench/costbench.hpp"
#include "aop/rng.hpp"

namespace k = aop::kernels;

namespace {

double median_seconds(std::size_t reps, const std::function<void()>& f) {
  std::vector<double> t;
  f();
  for (std::size_t i = 0; i < reps; ++i) {
    const auto a = std::chrono::steady_clock::now();
    f();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

std::vector<double> random_vector(std::size_t n, aop::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1, 1);
  return v;
}

void row(const std::string& name, double serial, double parallel, bool identical) {
  std::cout << std::left << std::setw(28) << name << std::right << std::setw(12) << serial * 1e3 << std::setw(12)
            << parallel * 1e3 << std::setw(9) << serial / parallel << "x  " << (identical ? "bitwise equal" : "DIFFER")
            << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel benchmark"};
  std::size_t reps = 11, size = 256;
  bool forward = true;
  app.add_option("--reps", reps)->capture_default_str();
  app.add_option("--size", size, "square matrix side")->capture_default_str();
  app.add_flag("!--no-forward", forward, "skip the AoP/AoR forward timing");
  CLI11_PARSE(app, argc, argv);

  aop::Rng rng(1);
  const std::size_t n = size;
  const auto a = random_vector(n * n, rng), b = random_vector(n * n, rng);
  std::vector<double> cs(n * n), cp(n * n);

  std::cout << "threads " << k::max_threads() << ", n = " << n << ", median of " << reps << '\n';
  std::cout << std::left << std::setw(28) << "kernel" << std::right << std::setw(12) << "serial ms" << std::setw(12)
            << "omp ms" << std::setw(10) << "speedup" << '\n';
  std::cout << std::fixed << std::setprecision(3);

  using Gemm = void (*)(std::span<const double>, std::span<const double>, std::span<double>, std::size_t,
                        std::size_t, std::size_t, bool);
  const std::pair<const char*, std::pair<Gemm, Gemm>> gemms[] = {
      {"gemm_nn", {k::serial::gemm_nn, k::parallel::gemm_nn}},
      {"gemm_nt", {k::serial::gemm_nt, k::parallel::gemm_nt}},
      {"gemm_tn", {k::serial::gemm_tn, k::parallel::gemm_tn}},
  };
  for (const auto& [name, fns] : gemms) {
    const double ts = median_seconds(reps, [&] { fns.first(a, b, cs, n, n, n, false); });
    const double tp = median_seconds(reps, [&] { fns.second(a, b, cp, n, n, n, false); });
    row(name, ts, tp, std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(double)) == 0);
  }
  {
    const double ts = median_seconds(reps, [&] { k::serial::softmax_rows(a, cs, n, n); });
    const double tp = median_seconds(reps, [&] { k::parallel::softmax_rows(a, cp, n, n); });
    row("softmax_rows", ts, tp, cs == cp);
  }
  {
    const std::size_t r = 13, len = 200000;
    std::vector<std::vector<double>> experts;
    std::vector<const double*> ptrs;
    for (std::size_t i = 0; i < r; ++i) experts.push_back(random_vector(len, rng));
    for (const auto& e : experts) ptrs.push_back(e.data());
    const auto w = random_vector(r, rng);
    std::vector<double> ys(len), yp(len);
    const double ts = median_seconds(reps, [&] { k::serial::weighted_sum(ptrs, w, ys); });
    const double tp = median_seconds(reps, [&] { k::parallel::weighted_sum(ptrs, w, yp); });
    row("weighted_sum (13 x 200k)", ts, tp, ys == yp);
  }

  if (forward) {
    std::cout << std::defaultfloat << "\nAoP vs AoR forward, r = 13, desk dims, single thread\n";
    for (std::size_t t : {16, 32}) {
      auto setup = aop::costbench::make_bench_setup(13, t, 2, aop::transformer::ModelConfig::desk(), 1);
      aop::costbench::write_compare(std::cout, aop::costbench::empirical_compare(setup.model, setup.inputs, reps));
    }
  }
  return 0;
}

#include <cmath>
#include <functional>
#include <vector>

#include "aop/autodiff/gradcheck.hpp"
#include "aop/autodiff/ops.hpp"
#include "aop/autodiff/optimizer.hpp"
#include "aop/autodiff/param_store.hpp"
#include "aop/errors.hpp"
#include "aop/rng.hpp"
#include "doctest.h"

using namespace aop::autodiff;

namespace {

Tensor random_leaf(Shape shape, aop::Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_data(std::move(shape), std::move(v), true);
}

// Runs backward once on f(params) and compares with central differences.
double op_gradcheck(std::vector<Tensor> params, const std::function<Tensor()>& f) {
  for (auto& p : params) p.zero_grad();
  backward(f());
  std::vector<std::pair<std::string, Tensor>> named;
  for (std::size_t i = 0; i < params.size(); ++i) named.emplace_back("p" + std::to_string(i), params[i]);
  auto res = check_gradients(named, [&] {
    NoGradGuard ng;
    return f().item();
  });
  INFO(res.worst);
  return res.max_rel_error;
}

}  // namespace

TEST_CASE("matmul examples") {
  auto eye = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  auto r = matmul(eye, eye);
  CHECK(std::vector<double>(r.data().begin(), r.data().end()) == std::vector<double>{1, 0, 0, 1});

  auto a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::from_data({2, 1}, {1, 1});
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.at(0) == 3.0);
  CHECK(c.at(1) == 7.0);

  CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 1})), aop::DimensionError);
}

TEST_CASE("matmul gradient matches central differences on a random 3x4 by 4x2") {
  aop::Rng rng(5);
  auto a = random_leaf({3, 4}, rng);
  auto b = random_leaf({4, 2}, rng);
  // weight the outputs so that each element's gradient differs
  auto w = Tensor::from_data({3, 2}, {0.3, -1.2, 0.7, 2.0, -0.4, 1.1});
  CHECK(op_gradcheck({a, b}, [&] { return sum(mul(matmul(a, b), w)); }) < 1e-6);
}

TEST_CASE("softmax examples") {
  auto z = softmax(Tensor::zeros({4}));
  for (double v : z.data()) CHECK(v == 0.25);

  auto big = softmax(Tensor::from_data({2}, {1000.0, 0.0}));
  CHECK(big.at(0) == 1.0);
  CHECK(big.at(1) >= 0.0);
  CHECK(big.at(1) < 1e-300);

  // reference: exp-normalize computed independently in Python
  auto s = softmax(Tensor::from_data({3}, {1, 2, 3}));
  CHECK(s.at(0) == doctest::Approx(0.09003057317038046).epsilon(1e-14));
  CHECK(s.at(1) == doctest::Approx(0.24472847105479767).epsilon(1e-14));
  CHECK(s.at(2) == doctest::Approx(0.6652409557748219).epsilon(1e-14));
}

TEST_CASE("softmax slices sum to one and stay positive (property)") {
  aop::Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + rng.below(6), n = 1 + rng.below(9);
    auto x = random_leaf({m, n}, rng, -30.0, 30.0);
    for (int axis : {0, 1}) {
      auto y = softmax(x, axis);
      const std::size_t outer = axis == 1 ? m : n, inner = axis == 1 ? n : m;
      for (std::size_t o = 0; o < outer; ++o) {
        double s = 0.0;
        for (std::size_t i = 0; i < inner; ++i) {
          const double v = axis == 1 ? y.at(o, i) : y.at(i, o);
          CHECK(v > 0.0);
          s += v;
        }
        CHECK(std::abs(s - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("sigmoid examples") {
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(std::abs(sigmoid(Tensor::scalar(50.0)).item() - 1.0) <= 1e-12);
  CHECK(sigmoid(Tensor::scalar(-2.0)).item() == doctest::Approx(0.11920292202211755).epsilon(1e-14));
  CHECK(sigmoid(Tensor::scalar(-800.0)).item() >= 0.0);
}

TEST_CASE("backward examples and contract") {
  auto x = Tensor::from_data({3}, {1, 2, 3}, true);
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  // repeated call without reset accumulates
  backward(sum(x));
  for (double g : x.grad()) CHECK(g == 2.0);
  x.zero_grad();
  backward(sum(scale(x, 0.0)));
  for (double g : x.grad()) CHECK(g == 0.0);

  CHECK_THROWS_AS(backward(x), aop::ContractError);
}

TEST_CASE("interior gradients are not double counted on repeated backward") {
  auto x = Tensor::from_data({2}, {0.5, -1.0}, true);
  auto h = tanh(x);
  auto loss = sum(mul(h, h));
  backward(loss);
  std::vector<double> once(x.grad().begin(), x.grad().end());
  backward(loss);
  for (std::size_t i = 0; i < 2; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * once[i]).epsilon(1e-15));
}

TEST_CASE("non-finite values are rejected") {
  CHECK_THROWS_AS(log(Tensor::scalar(0.0)), aop::NumericError);
  CHECK_THROWS_AS(exp(Tensor::scalar(1000.0)), aop::NumericError);
  CHECK_THROWS_AS(Tensor::from_data({1}, {NAN}), aop::NumericError);
}

TEST_CASE("every differentiable op passes a finite-difference check on random shapes") {
  aop::Rng rng(2024);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t m = 1 + rng.below(4), n = 2 + rng.below(4), k = 1 + rng.below(4);
    auto a = random_leaf({m, n}, rng);
    auto b = random_leaf({m, n}, rng);
    auto c = random_leaf({n, k}, rng);
    auto col = random_leaf({m, 1}, rng);
    auto bias = random_leaf({n}, rng);
    auto gain = random_leaf({n}, rng, 0.5, 1.5);
    auto w = random_leaf({m, n}, rng);  // weights make each output element matter differently
    auto wk = random_leaf({m, k}, rng);
    auto pos = random_leaf({m, n}, rng, 0.5, 2.0);
    const double tol = 1e-4;

    CHECK(op_gradcheck({a, c}, [&] { return sum(mul(matmul(a, c), wk)); }) < tol);
    CHECK(op_gradcheck({a, b}, [&] { return sum(mul(matmul_nt(a, b), matmul_nt(w, w))); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(transpose(transpose(a)), w)); }) < tol);
    CHECK(op_gradcheck({a, b}, [&] { return sum(mul(sub(add(a, b), mul(a, b)), w)); }) < tol);
    CHECK(op_gradcheck({a, bias}, [&] { return sum(mul(add_row(a, bias), w)); }) < tol);
    CHECK(op_gradcheck({a, col}, [&] { return sum(mul(mul_col(a, col), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(one_minus(add_scalar(scale(a, 1.7), 0.3)), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(sigmoid(a), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(tanh(a), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(relu(add_scalar(a, 0.05)), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(exp(a), w)); }) < tol);
    CHECK(op_gradcheck({pos}, [&] { return sum(mul(log(pos), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(softmax(a, 1), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(softmax(a, 0), w)); }) < tol);
    CHECK(op_gradcheck({a, gain, bias}, [&] { return sum(mul(layer_norm(a, gain, bias, 1e-6), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(concat_cols({slice_cols(a, 0, 1), slice_cols(a, 1, n)}), w)); }) < tol);
    CHECK(op_gradcheck({a}, [&] {
            std::vector<Tensor> rows;
            for (std::size_t i = 0; i < m; ++i) rows.push_back(row(a, i));
            return sum(mul(concat_rows(rows), w));
          }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(reshape(reshape(a, {m * n}), {m, n}), w)); }) < tol);

    auto flat = random_leaf({m * n + 3}, rng);
    CHECK(op_gradcheck({flat}, [&] { return sum(mul(view(flat, 2, {m, n}), w)); }) < tol);

    auto alpha = random_leaf({3}, rng);
    auto i0 = random_leaf({m, n}, rng), i1 = random_leaf({m, n}, rng), i2 = random_leaf({m, n}, rng);
    CHECK(op_gradcheck({i0, i1, i2, alpha}, [&] { return sum(mul(weighted_sum({i0, i1, i2}, alpha), w)); }) < tol);

    auto sq = random_leaf({n, n}, rng);
    auto wsq = random_leaf({n, n}, rng);
    CHECK(op_gradcheck({sq}, [&] { return sum(mul(softmax(causal_mask(sq), 1), wsq)); }) < tol);

    std::vector<int> ids;
    for (std::size_t j = 0; j < n; ++j) ids.push_back(static_cast<int>(rng.below(n + 2)));
    auto wide = random_leaf({m, n + 2}, rng);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(scatter_cols(a, ids, n + 2), wide)); }) < tol);
    CHECK(op_gradcheck({a}, [&] { return sum(mul(pad_cols(a, n + 2), wide)); }) < tol);

    std::vector<int> picks;
    for (std::size_t t = 0; t < m; ++t) picks.push_back(static_cast<int>(rng.below(n)));
    auto table = random_leaf({n, k}, rng);
    std::vector<int> rows_ids;
    for (std::size_t t = 0; t < m; ++t) rows_ids.push_back(static_cast<int>(rng.below(n)));
    CHECK(op_gradcheck({a}, [&] { return mean(pick(a, picks)); }) < tol);
    CHECK(op_gradcheck({table}, [&] { return sum(mul(gather_rows(table, rows_ids), wk)); }) < tol);

    std::vector<double> targets;
    for (std::size_t i = 0; i < m * n; ++i) targets.push_back(static_cast<double>(rng.below(2)));
    CHECK(op_gradcheck({a}, [&] { return bce_with_logits_sum(a, targets); }) < tol);
  }
}

TEST_CASE("forward pass is bit-identical across runs") {
  auto run = [] {
    aop::Rng rng(99);
    auto a = random_leaf({5, 7}, rng);
    auto b = random_leaf({7, 3}, rng);
    auto y = softmax(tanh(matmul(a, b)), 1);
    return std::vector<double>(y.data().begin(), y.data().end());
  };
  CHECK(run() == run());
}

TEST_CASE("gather_rows rejects out-of-range ids") {
  auto table = Tensor::zeros({4, 2});
  std::vector<int> bad = {1, 4};
  CHECK_THROWS_AS(gather_rows(table, bad), aop::VocabularyError);
}

TEST_CASE("param store invariants") {
  ParamStore store;
  aop::Rng rng(1);
  store.glorot("w", {3, 4}, rng);
  CHECK_THROWS_AS(store.zeros("w", {1}), aop::ContractError);
  CHECK_THROWS_AS(store.get("missing"), aop::LookupError);
  CHECK(store.element_count() == 12);
  auto snap = store.snapshot();
  store.get("w").mutable_data()[0] = 42.0;
  store.restore(snap);
  CHECK(store.get("w").at(0) == snap[0]);
}

TEST_CASE("optimizer: one step on w^2 decreases |w|") {
  ParamStore store;
  auto w = store.add("w", Tensor::scalar(1.0));
  Adam adam;
  backward(mul(w, w));
  optimizer_step(store, adam, Schedule{});
  CHECK(std::abs(w.item()) < 1.0);
  // optimizer state shapes follow the parameters
  CHECK(adam.first_moments().size() == 1);
  CHECK(adam.first_moments()[0].size() == 1);
}

TEST_CASE("optimizer: missing gradients are a contract error") {
  ParamStore store;
  store.zeros("w", {2});
  Adam adam;
  CHECK_THROWS_AS(optimizer_step(store, adam, Schedule{}), aop::ContractError);
}

TEST_CASE("warm-up schedule rises before the warm-up count and decays after") {
  auto s = Schedule::parse("warmup", 1e-3, 50);
  for (std::size_t t = 1; t < 50; ++t) CHECK(s.rate(t + 1) > s.rate(t));
  for (std::size_t t = 50; t < 500; ++t) CHECK(s.rate(t + 1) < s.rate(t));
  CHECK(s.rate(50) == doctest::Approx(1e-3));
  CHECK(Schedule::parse("constant", 2e-3, 0).rate(999) == 2e-3);
  CHECK_THROWS_AS(Schedule::parse("cosine", 1e-3, 1), aop::ContractError);
}

TEST_CASE("200 Adam steps on a consistent least-squares toy reach loss below 1e-3") {
  // y = X w_true exactly, so the optimum loss is 0.
  aop::Rng rng(8);
  const std::size_t rows = 12, dim = 3;
  std::vector<double> xs(rows * dim), ys(rows);
  const double w_true[3] = {0.8, -1.5, 0.3};
  for (std::size_t i = 0; i < rows; ++i) {
    ys[i] = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      xs[i * dim + j] = rng.uniform(-1.0, 1.0);
      ys[i] += xs[i * dim + j] * w_true[j];
    }
  }
  auto X = Tensor::from_data({rows, dim}, xs);
  auto Y = Tensor::from_data({rows, 1}, ys);
  ParamStore store;
  auto w = store.zeros("w", {dim, 1});
  Adam adam;
  auto schedule = Schedule::parse("constant", 0.05, 0);
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    store.zero_grad();
    auto r = sub(matmul(X, w), Y);
    auto l = mean(mul(r, r));
    loss = l.item();
    backward(l);
    optimizer_step(store, adam, schedule);
  }
  CHECK(loss < 1e-3);
}

#include "aop/autodiff/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "aop/autodiff/kernels.hpp"
#include "aop/errors.hpp"

namespace aop::autodiff {

namespace {

struct Dims {
  std::size_t rows;
  std::size_t cols;
};

Dims dims(const Tensor& t, const char* op) {
  if (!t.defined()) throw ContractError(std::string(op) + ": undefined tensor");
  if (t.rank() > 2) throw DimensionError(std::string(op) + ": expected rank <= 2, got " + shape_string(t.shape()));
  return {t.rows(), t.cols()};
}

void check_finite(const std::vector<double>& v, const char* op) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value produced by ") + op);
  }
}

// Gradient buffer of parent i, or nullptr when that parent is not tracked.
double* grad_of(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  return p->requires_grad ? p->ensure_grad().data() : nullptr;
}

Tensor make(Shape shape, std::vector<double> value, const std::vector<Tensor>& inputs, const char* op,
            std::function<void(Node&)> bw) {
  check_finite(value, op);
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->op = op;
  bool track = false;
  if (grad_enabled()) {
    for (const auto& t : inputs) track = track || t.requires_grad();
  }
  if (track) {
    node->requires_grad = true;
    node->parents.reserve(inputs.size());
    for (const auto& t : inputs) node->parents.push_back(t.node_ptr());
    node->backward = std::move(bw);
  }
  return Tensor(std::move(node));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& x, const char* op, Fwd f, Deriv df) {
  std::vector<double> out(x.size());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make(x.shape(), std::move(out), {x}, op, [df](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& xv = self.parents[0]->value;
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * df(xv[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto [m, k] = dims(a, "matmul");
  const auto [k2, n] = dims(b, "matmul");
  if (k != k2) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  }
  std::vector<double> out(m * n);
  kernels::gemm_nn(a.data(), b.data(), out, m, k, n);
  return make({m, n}, std::move(out), {a, b}, "matmul", [m, k, n](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) kernels::gemm_nt(self.grad, pb->value, pa->ensure_grad(), m, n, k, true);
    if (pb->requires_grad) kernels::gemm_tn(pa->value, self.grad, pb->ensure_grad(), k, m, n, true);
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  const auto [m, k] = dims(a, "matmul_nt");
  const auto [n, k2] = dims(b, "matmul_nt");
  if (k != k2) {
    throw DimensionError("matmul_nt: inner dimensions disagree " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()) + "^T");
  }
  std::vector<double> out(m * n);
  kernels::gemm_nt(a.data(), b.data(), out, m, k, n);
  return make({m, n}, std::move(out), {a, b}, "matmul_nt", [m, k, n](Node& self) {
    Node* pa = self.parents[0].get();
    Node* pb = self.parents[1].get();
    if (pa->requires_grad) kernels::gemm_nn(self.grad, pb->value, pa->ensure_grad(), m, n, k, true);
    if (pb->requires_grad) kernels::gemm_tn(self.grad, pa->value, pb->ensure_grad(), n, m, k, true);
  });
}

Tensor transpose(const Tensor& a) {
  const auto [m, n] = dims(a, "transpose");
  std::vector<double> out(m * n);
  auto in = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = in[i * n + j];
  return make({n, m}, std::move(out), {a}, "transpose", [m, n](Node& self) {
    double* ga = grad_of(self, 0);
    if (!ga) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += self.grad[j * m + i];
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make(a.shape(), std::move(out), {a, b}, "add", [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (double* g = grad_of(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make(a.shape(), std::move(out), {a, b}, "sub", [](Node& self) {
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double* g = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  auto x = a.data();
  auto y = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make(a.shape(), std::move(out), {a, b}, "mul", [](Node& self) {
    const auto& xv = self.parents[0]->value;
    const auto& yv = self.parents[1]->value;
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * yv[i];
    if (double* g = grad_of(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * xv[i];
  });
}

Tensor add_row(const Tensor& a, const Tensor& bias) {
  const auto [m, n] = dims(a, "add_row");
  if (bias.size() != n) {
    throw DimensionError("add_row: bias of " + std::to_string(bias.size()) + " for " + std::to_string(n) +
                         " columns");
  }
  std::vector<double> out(a.data().begin(), a.data().end());
  auto b = bias.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] += b[j];
  return make(a.shape(), std::move(out), {a, bias}, "add_row", [m, n](Node& self) {
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double* g = grad_of(self, 1))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[j] += self.grad[i * n + j];
  });
}

Tensor mul_col(const Tensor& a, const Tensor& c) {
  const auto [m, n] = dims(a, "mul_col");
  if (c.size() != m) {
    throw DimensionError("mul_col: column of " + std::to_string(c.size()) + " for " + std::to_string(m) + " rows");
  }
  std::vector<double> out(m * n);
  auto x = a.data();
  auto s = c.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = x[i * n + j] * s[i];
  return make(a.shape(), std::move(out), {a, c}, "mul_col", [m, n](Node& self) {
    const auto& xv = self.parents[0]->value;
    const auto& sv = self.parents[1]->value;
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * n + j] * sv[i];
    if (double* g = grad_of(self, 1))
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * xv[i * n + j];
        g[i] += acc;
      }
  });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, "scale", [s](double x) { return x * s; }, [s](double, double) { return s; });
}

Tensor add_scalar(const Tensor& a, double s) {
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Tensor one_minus(const Tensor& a) {
  return unary(a, "one_minus", [](double x) { return 1.0 - x; }, [](double, double) { return -1.0; });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, "sigmoid",
      [](double v) {
        if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(x, "relu", [](double v) { return v > 0 ? v : 0.0; },
               [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& x) {
  return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value");
  }
  return unary(x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Tensor softmax(const Tensor& x, int axis) {
  const auto [m, n] = dims(x, "softmax");
  std::vector<double> out(m * n);
  // Rank 1 always normalizes across its elements.
  const bool by_rows = x.rank() < 2 || axis == 1 || axis == -1;
  if (!by_rows && axis != 0) throw DimensionError("softmax: axis must be 0 or 1");
  if (by_rows) {
    kernels::softmax_rows(x.data(), out, m, n);
  } else {
    auto in = x.data();
    for (std::size_t j = 0; j < n; ++j) {
      double mx = in[j];
      for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, in[i * n + j]);
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += (out[i * n + j] = std::exp(in[i * n + j] - mx));
      for (std::size_t i = 0; i < m; ++i) out[i * n + j] /= s;
    }
  }
  return make(x.shape(), std::move(out), {x}, "softmax", [m, n, by_rows](Node& self) {
    double* gx = grad_of(self, 0);
    if (!gx) return;
    const auto& y = self.value;
    const auto& g = self.grad;
    if (by_rows) {
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
        for (std::size_t j = 0; j < n; ++j) gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
      }
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t i = 0; i < m; ++i) dot += g[i * n + j] * y[i * n + j];
        for (std::size_t i = 0; i < m; ++i) gx[i * n + j] += y[i * n + j] * (g[i * n + j] - dot);
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const auto [m, n] = dims(x, "layer_norm");
  if (gain.size() != n || bias.size() != n) throw DimensionError("layer_norm: gain/bias size mismatch");
  std::vector<double> xhat(m * n);
  std::vector<double> inv_std(m);
  std::vector<double> out(m * n);
  auto in = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += in[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = in[i * n + j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(n);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (in[i * n + j] - mu) * inv_std[i];
      out[i * n + j] = xhat[i * n + j] * gv[j] + bv[j];
    }
  }
  return make(x.shape(), std::move(out), {x, gain, bias}, "layer_norm",
              [m, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                const auto& g = self.grad;
                const auto& gv = self.parents[1]->value;
                if (double* gx = grad_of(self, 0)) {
                  const double inv_n = 1.0 / static_cast<double>(n);
                  for (std::size_t i = 0; i < m; ++i) {
                    double mean_d = 0.0;
                    double mean_dx = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                      const double d = g[i * n + j] * gv[j];
                      mean_d += d;
                      mean_dx += d * xhat[i * n + j];
                    }
                    mean_d *= inv_n;
                    mean_dx *= inv_n;
                    for (std::size_t j = 0; j < n; ++j) {
                      const double d = g[i * n + j] * gv[j];
                      gx[i * n + j] += inv_std[i] * (d - mean_d - xhat[i * n + j] * mean_dx);
                    }
                  }
                }
                if (double* gg = grad_of(self, 1))
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
                if (double* gb = grad_of(self, 2))
                  for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
              });
}

Tensor gather_rows(const Tensor& table, std::span<const int> ids) {
  const auto [v, d] = dims(table, "gather_rows");
  if (ids.empty()) throw ContractError("gather_rows: empty id list");
  std::vector<int> idx(ids.begin(), ids.end());
  for (int id : idx) {
    if (id < 0 || static_cast<std::size_t>(id) >= v) {
      throw VocabularyError("id " + std::to_string(id) + " outside table of " + std::to_string(v) + " rows");
    }
  }
  std::vector<double> out(idx.size() * d);
  auto in = table.data();
  for (std::size_t t = 0; t < idx.size(); ++t)
    std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(idx[t] * d), d, out.begin() + static_cast<std::ptrdiff_t>(t * d));
  const std::size_t len = idx.size();
  return make({len, d}, std::move(out), {table}, "gather_rows", [d, idx = std::move(idx)](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t t = 0; t < idx.size(); ++t)
      for (std::size_t j = 0; j < d; ++j) g[static_cast<std::size_t>(idx[t]) * d + j] += self.grad[t * d + j];
  });
}

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end) {
  const auto [m, n] = dims(a, "slice_cols");
  if (begin >= end || end > n) throw DimensionError("slice_cols: bad range");
  const std::size_t w = end - begin;
  std::vector<double> out(m * w);
  auto in = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = in[i * n + begin + j];
  return make({m, w}, std::move(out), {a}, "slice_cols", [m, n, w, begin](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * n + begin + j] += self.grad[i * w + j];
  });
}

Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end) {
  const auto [m, n] = dims(a, "slice_rows");
  if (begin >= end || end > m) throw DimensionError("slice_rows: bad range");
  auto in = a.data();
  std::vector<double> out(in.begin() + static_cast<std::ptrdiff_t>(begin * n),
                          in.begin() + static_cast<std::ptrdiff_t>(end * n));
  return make({end - begin, n}, std::move(out), {a}, "slice_rows", [n, begin](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
  });
}

Tensor row(const Tensor& a, std::size_t i) { return slice_rows(a, i, i + 1); }

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  const std::size_t m = dims(parts[0], "concat_cols").rows;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const auto dd = dims(p, "concat_cols");
    if (dd.rows != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(dd.cols);
    total += dd.cols;
  }
  std::vector<double> out(m * total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto in = parts[k].data();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + off + j] = in[i * widths[k] + j];
    off += widths[k];
  }
  return make({m, total}, std::move(out), parts, "concat_cols", [m, total, widths](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < widths.size(); ++k) {
      if (double* g = grad_of(self, k))
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < widths[k]; ++j) g[i * widths[k] + j] += self.grad[i * total + off + j];
      off += widths[k];
    }
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ContractError("concat_rows: nothing to concatenate");
  const std::size_t n = dims(parts[0], "concat_rows").cols;
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    const auto dd = dims(p, "concat_rows");
    if (dd.cols != n) throw DimensionError("concat_rows: column counts differ");
    rows += dd.rows;
    sizes.push_back(p.size());
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make({rows, n}, std::move(out), parts, "concat_rows", [sizes](Node& self) {
    std::size_t off = 0;
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (double* g = grad_of(self, k))
        for (std::size_t i = 0; i < sizes[k]; ++i) g[i] += self.grad[off + i];
      off += sizes[k];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) throw DimensionError("reshape: element count changes");
  std::vector<double> out(a.data().begin(), a.data().end());
  return make(std::move(shape), std::move(out), {a}, "reshape", [](Node& self) {
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor view(const Tensor& flat, std::size_t offset, Shape shape) {
  const std::size_t len = shape_size(shape);
  if (offset + len > flat.size()) throw DimensionError("view: window exceeds flat tensor");
  auto in = flat.data();
  std::vector<double> out(in.begin() + static_cast<std::ptrdiff_t>(offset),
                          in.begin() + static_cast<std::ptrdiff_t>(offset + len));
  return make(std::move(shape), std::move(out), {flat}, "view", [offset](Node& self) {
    if (double* g = grad_of(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[offset + i] += self.grad[i];
  });
}

Tensor weighted_sum(const std::vector<Tensor>& items, const Tensor& weights) {
  if (items.empty()) throw ContractError("weighted_sum: no items");
  if (weights.size() != items.size()) {
    throw ContractError("weighted_sum: " + std::to_string(weights.size()) + " weights for " +
                        std::to_string(items.size()) + " items");
  }
  std::vector<const double*> ptrs;
  for (const auto& t : items) {
    require_same_shape(items[0], t, "weighted_sum");
    ptrs.push_back(t.data().data());
  }
  std::vector<double> out(items[0].size());
  kernels::weighted_sum(ptrs, weights.data(), out);
  std::vector<Tensor> inputs = items;
  inputs.push_back(weights);
  const std::size_t r = items.size();
  return make(items[0].shape(), std::move(out), inputs, "weighted_sum", [r](Node& self) {
    const auto& w = self.parents[r]->value;
    double* gw = grad_of(self, r);
    const auto& g = self.grad;
    for (std::size_t i = 0; i < r; ++i) {
      const auto& xi = self.parents[i]->value;
      if (double* gi = grad_of(self, i))
        for (std::size_t e = 0; e < g.size(); ++e) gi[e] += w[i] * g[e];
      if (gw) {
        double dot = 0.0;
        for (std::size_t e = 0; e < g.size(); ++e) dot += xi[e] * g[e];
        gw[i] += dot;
      }
    }
  });
}

Tensor causal_mask(const Tensor& scores) {
  const auto [m, n] = dims(scores, "causal_mask");
  std::vector<double> out(scores.data().begin(), scores.data().end());
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out[i * n + j] = kMaskValue;
  return make(scores.shape(), std::move(out), {scores}, "causal_mask", [m, n](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j <= i && j < n; ++j) g[i * n + j] += self.grad[i * n + j];
  });
}

Tensor scatter_cols(const Tensor& a, std::span<const int> ids, std::size_t width) {
  const auto [m, n] = dims(a, "scatter_cols");
  if (ids.size() != n) throw DimensionError("scatter_cols: one id per column required");
  std::vector<int> idx(ids.begin(), ids.end());
  for (int id : idx) {
    if (id < 0 || static_cast<std::size_t>(id) >= width) {
      throw VocabularyError("scatter_cols: id " + std::to_string(id) + " outside width " + std::to_string(width));
    }
  }
  std::vector<double> out(m * width, 0.0);
  auto in = a.data();
  for (std::size_t t = 0; t < m; ++t)
    for (std::size_t j = 0; j < n; ++j) out[t * width + static_cast<std::size_t>(idx[j])] += in[t * n + j];
  return make({m, width}, std::move(out), {a}, "scatter_cols", [m, n, width, idx = std::move(idx)](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t t = 0; t < m; ++t)
      for (std::size_t j = 0; j < n; ++j) g[t * n + j] += self.grad[t * width + static_cast<std::size_t>(idx[j])];
  });
}

Tensor pad_cols(const Tensor& a, std::size_t width) {
  const auto [m, n] = dims(a, "pad_cols");
  if (width < n) throw DimensionError("pad_cols: width smaller than input");
  if (width == n) return a;
  std::vector<double> out(m * width, 0.0);
  auto in = a.data();
  for (std::size_t i = 0; i < m; ++i) std::copy_n(in.begin() + static_cast<std::ptrdiff_t>(i * n), n, out.begin() + static_cast<std::ptrdiff_t>(i * width));
  return make({m, width}, std::move(out), {a}, "pad_cols", [m, n, width](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * width + j];
  });
}

Tensor pick(const Tensor& a, std::span<const int> ids) {
  const auto [m, n] = dims(a, "pick");
  if (ids.size() != m) throw DimensionError("pick: one id per row required");
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> out(m);
  auto in = a.data();
  for (std::size_t t = 0; t < m; ++t) {
    if (idx[t] < 0 || static_cast<std::size_t>(idx[t]) >= n) {
      throw VocabularyError("pick: id " + std::to_string(idx[t]) + " outside " + std::to_string(n) + " columns");
    }
    out[t] = in[t * n + static_cast<std::size_t>(idx[t])];
  }
  return make({m}, std::move(out), {a}, "pick", [n, idx = std::move(idx)](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    for (std::size_t t = 0; t < idx.size(); ++t) g[t * n + static_cast<std::size_t>(idx[t])] += self.grad[t];
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make({1}, {s}, {a}, "sum", [](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    const std::size_t len = self.parents[0]->value.size();
    for (std::size_t i = 0; i < len; ++i) g[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Tensor bce_with_logits_sum(const Tensor& logits, std::span<const double> targets) {
  if (targets.size() != logits.size()) {
    throw ContractError("bce_with_logits_sum: " + std::to_string(targets.size()) + " targets for " +
                        std::to_string(logits.size()) + " logits");
  }
  std::vector<double> t(targets.begin(), targets.end());
  double s = 0.0;
  auto x = logits.data();
  for (std::size_t i = 0; i < t.size(); ++i) {
    s += std::max(x[i], 0.0) - x[i] * t[i] + std::log1p(std::exp(-std::abs(x[i])));
  }
  return make({1}, {s}, {logits}, "bce_with_logits", [t = std::move(t)](Node& self) {
    double* g = grad_of(self, 0);
    if (!g) return;
    const auto& x = self.parents[0]->value;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double sig = x[i] >= 0 ? 1.0 / (1.0 + std::exp(-x[i])) : std::exp(x[i]) / (1.0 + std::exp(x[i]));
      g[i] += self.grad[0] * (sig - t[i]);
    }
  });
}

}  // namespace aop::autodiff

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "aop/autodiff/tensor.hpp"

// Differentiable operations. Every op validates shapes (DimensionError),
// checks its output for NaN/Inf (NumericError) and records a backward closure
// when grad mode is on and an input requires grad.
namespace aop::autodiff {

Tensor matmul(const Tensor& a, const Tensor& b);     // [m x k] * [k x n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [m x k] * [n x k]^T
Tensor transpose(const Tensor& a);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
// a[m x n] + bias broadcast over rows; bias has n elements.
Tensor add_row(const Tensor& a, const Tensor& bias);
// a[m x n] scaled row-wise by c[m x 1].
Tensor mul_col(const Tensor& a, const Tensor& c);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor one_minus(const Tensor& a);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor relu(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);  // NumericError on non-positive input

// Max-shifted softmax. Rank 1: over all elements. Rank 2: axis 1 normalizes
// each row, axis 0 each column.
Tensor softmax(const Tensor& x, int axis = 1);

// Row-wise layer normalization with learned gain and bias (n elements each).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);

// Rows of `table` selected by `ids`; VocabularyError for an id past the table.
Tensor gather_rows(const Tensor& table, std::span<const int> ids);

Tensor slice_cols(const Tensor& a, std::size_t begin, std::size_t end);
Tensor slice_rows(const Tensor& a, std::size_t begin, std::size_t end);
Tensor row(const Tensor& a, std::size_t i);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor reshape(const Tensor& a, Shape shape);

// Contiguous window of a rank-1 tensor, reshaped. Parameter views use this.
Tensor view(const Tensor& flat, std::size_t offset, Shape shape);

// sum_i weights[i] * items[i]; items share one shape, weights has items.size()
// elements. Gradients reach both the weights and every item.
Tensor weighted_sum(const std::vector<Tensor>& items, const Tensor& weights);

// Entries above the diagonal of a [k x k] score matrix are replaced by a large
// negative constant so that a following softmax gives them zero weight.
Tensor causal_mask(const Tensor& scores);

// out[t, ids[j]] += a[t, j]; out has `width` columns.
Tensor scatter_cols(const Tensor& a, std::span<const int> ids, std::size_t width);
// Zero-pads a[m x n] on the right to `width` columns.
Tensor pad_cols(const Tensor& a, std::size_t width);
// out[t] = a[t, ids[t]], rank-1 of length ids.size().
Tensor pick(const Tensor& a, std::span<const int> ids);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);

// sum_i [max(x,0) - x*t + log(1 + exp(-|x|))], the numerically stable form of
// binary cross-entropy on logits.
Tensor bce_with_logits_sum(const Tensor& logits, std::span<const double> targets);

inline constexpr double kMaskValue = -1e9;

}  // namespace aop::autodiff

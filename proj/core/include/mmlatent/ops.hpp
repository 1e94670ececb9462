#pragma once

#include <cstdint>
#include <vector>

#include "mmlatent/tensor.hpp"

namespace mmlatent {

/// Differentiable op vocabulary. Every op validates shapes (ShapeError names
/// both shapes), computes in double and stores at the active precision, and
/// attaches a backward closure when the tape is enabled and any input
/// requires grad.

// ---- elementwise ----
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& x, double c);
/// a*x + b, elementwise with host scalars.
TensorPtr affine(const TensorPtr& x, double a, double b);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr tanh_op(const TensorPtr& x);
TensorPtr gelu(const TensorPtr& x);
TensorPtr exp_op(const TensorPtr& x);
/// Clamp to [0,1]; pass-through subgradient inside the interval, 0 outside.
TensorPtr clamp01(const TensorPtr& x);

// ---- linear algebra ----
TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
/// x: [n x d] plus row vector b (numel d), broadcast over rows.
TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& b);
TensorPtr transpose(const TensorPtr& x);

// ---- shape ----
TensorPtr reshape(const TensorPtr& x, std::vector<std::int64_t> new_shape);
TensorPtr slice_cols(const TensorPtr& x, std::int64_t start, std::int64_t len);
/// Select rows of a rank-2 tensor by index (repeats allowed).
TensorPtr gather_rows(const TensorPtr& x, const std::vector<std::int64_t>& rows);
/// Concatenate along the last axis; all inputs share the leading extent.
TensorPtr concat_cols(const std::vector<TensorPtr>& parts);
/// Concatenate along the first axis; all inputs share trailing extents.
TensorPtr concat_rows(const std::vector<TensorPtr>& parts);
/// [H, W, C] -> [H/b, W/b, C*b*b]; output channel (dy*b+dx)*C + c holds input
/// pixel (i*b+dy, j*b+dx, c). Exact inverse: depth_to_space.
TensorPtr space_to_depth(const TensorPtr& x, std::int64_t block);
TensorPtr depth_to_space(const TensorPtr& x, std::int64_t block);

// ---- normalization / attention pieces ----
/// Numerically stabilized softmax along `axis` (2-d tensors; negative axes
/// allowed). Throws NumericError on non-finite input.
TensorPtr softmax(const TensorPtr& x, std::int64_t axis = -1);
/// Row-wise layer norm over the last axis with learnable gain/shift.
TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps = 1e-5);
/// Rows of `table` ([V x d]) selected by token ids; backward scatter-adds.
TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids);

// ---- reductions / losses ----
TensorPtr mean_all(const TensorPtr& x);
TensorPtr sum_all(const TensorPtr& x);
TensorPtr mse(const TensorPtr& a, const TensorPtr& b);
/// logits: [n x V], one target id per row. Fused log-softmax + NLL,
/// sum-reduced (divide by n for the mean variant at the call site).
TensorPtr cross_entropy_with_softmax(const TensorPtr& logits, const std::vector<int>& targets);

}  // namespace mmlatent

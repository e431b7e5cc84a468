#pragma once

#include "mhqg/nn/graph.hpp"

#include <span>
#include <vector>

// Differentiable operations on Graph expressions. Shapes follow Eigen
// (rows × cols); "vectors" are single columns.
namespace mhqg::nn {

Expr matmul(Expr a, Expr b);
Expr add(Expr a, Expr b);
Expr sub(Expr a, Expr b);
Expr cmult(Expr a, Expr b);
Expr scale(Expr x, double factor);
/// factor·x + offset, elementwise.
Expr affine_scalar(Expr x, double factor, double offset);
/// s·x for a 1×1 expression s.
Expr scalar_mul(Expr s, Expr x);
Expr sum(std::span<const Expr> terms);
Expr sum_all(Expr x);

/// x (r×c) plus the column vector b (r×1) added to every column.
Expr add_bias(Expr x, Expr b);
Expr affine(Expr weight, Expr x, Expr bias);
Expr broadcast_cols(Expr column, Index count);
Expr broadcast_rows(Expr row, Index count);

Expr sigmoid(Expr x);
Expr tanh(Expr x);
Expr relu(Expr x);
/// log(max(x, eps)); gradient is zero where the clamp is active.
Expr log_clamped(Expr x, double eps);
/// Inverted dropout; identity outside training mode.
Expr dropout(Expr x, double rate);

/// Softmax applied to each column independently.
Expr softmax_cols(Expr x);
/// Row-wise maximum over columns: r×c → r×1.
Expr max_cols(Expr x);
/// Row-wise maximum within consecutive column segments ending at segment_ends.
Expr segment_max_cols(Expr x, std::span<const Index> segment_ends);

Expr transpose(Expr x);
Expr concat_rows(std::span<const Expr> parts);
Expr concat_cols(std::span<const Expr> parts);
Expr slice_rows(Expr x, Index start, Index count);
Expr slice_cols(Expr x, Index start, Index count);
Expr column(Expr x, Index j);
Expr element(Expr x, Index i, Index j = 0);
/// Zero-extends a column vector to `total` rows.
Expr pad_rows(Expr x, Index total);
/// out[indices[i]] += x[i]; result is size×1.
Expr scatter_add(Expr x, std::span<const int> indices, Index size);
/// Sliding windows of `width` columns stacked vertically: d×L → (width·d)×(L−width+1).
Expr im2col(Expr x, Index width);

/// Fused LSTM cell update. gates is 4H×1 laid out (input, forget, candidate,
/// output); returns [h; c] as a 2H×1 column.
Expr lstm_cell(Expr gates, Expr prev_cell);

inline Expr operator+(Expr a, Expr b) { return add(a, b); }
inline Expr operator-(Expr a, Expr b) { return sub(a, b); }

}  // namespace mhqg::nn

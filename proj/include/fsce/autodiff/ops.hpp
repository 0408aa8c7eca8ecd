#pragma once

#include "fsce/autodiff/tape.hpp"

#include <vector>

namespace fsce {

// Elementwise ops accept equal shapes, or a second operand broadcastable to
// the first through unit axes (same rank).  Broadcast axes are sum-reduced
// in backward.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul_elementwise(const Tensor& a, const Tensor& b);

Tensor add_scalar(const Tensor& a, double c);
Tensor scale(const Tensor& a, double c);

Tensor matmul(const Tensor& a, const Tensor& b);  // (m,k)·(k,p)
Tensor transpose2d(const Tensor& a);

// 1D convolution, stride 1, zero "same" padding, odd kernel width.
// x: (c_in, w), k: (c_out, c_in, kw), bias: (c_out) -> (c_out, w)
Tensor conv1d(const Tensor& x, const Tensor& k, const Tensor& bias);
// 2D convolution, same contract on both spatial axes.
// x: (c_in, h, w), k: (c_out, c_in, kh, kw), bias: (c_out) -> (c_out, h, w)
Tensor conv2d(const Tensor& x, const Tensor& k, const Tensor& bias);

// x: (d_in), W: (d_out, d_in), b: (d_out) -> W·x + b
Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor relu(const Tensor& x);     // gradient at exactly 0 is 0
Tensor sigmoid(const Tensor& x);  // output strictly inside (0, 1)

// Temperature softmax over a rank-1 tensor; max-subtracted for stability.
Tensor softmax_temp(const Tensor& x, double tau);
// Row-wise variant over a rank-2 tensor (each row sums to 1).
Tensor softmax_temp_rows(const Tensor& x, double tau);

// (m, d) -> (d) column means
Tensor global_average_pool(const Tensor& x);

// Each row divided by max(||row||_2, eps).
Tensor l2_normalize_rows(const Tensor& x, double eps = 1e-12);

Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor reshape(const Tensor& x, Shape shape);

Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Both operands must lie in [0, 1].
Tensor bce_loss(const Tensor& pred, const Tensor& target);

Tensor sum(const Tensor& x);  // scalar

}  // namespace fsce

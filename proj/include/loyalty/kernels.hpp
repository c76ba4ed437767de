#pragma once

#include <span>

#include "loyalty/matrix.hpp"

// Dense-layer kernels. `serial` is the plain reference implementation; `omp`
// is the OpenMP version used for training. Both accumulate every output entry
// in the same order, so their results are bitwise identical for any thread
// count. Outputs are resized by the callee.
namespace loyalty::kernels {

namespace serial {

// out = in * weights + bias (weights is fan_in x fan_out)
void affine_forward(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);
// d_weights = in^T * d_out, d_bias = column sums of d_out
void affine_backward_params(const Matrix& in, const Matrix& d_out, Matrix& d_weights, std::span<double> d_bias);
// d_in = d_out * weights^T
void affine_backward_input(const Matrix& d_out, const Matrix& weights, Matrix& d_in);
void tanh_inplace(Matrix& m);
// grad *= 1 - act^2
void tanh_backward(const Matrix& act, Matrix& grad);
// Row-wise numerically stable softmax.
void softmax_rows(const Matrix& logits, Matrix& probs);

}  // namespace serial

namespace omp {

void affine_forward(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out);
void affine_backward_params(const Matrix& in, const Matrix& d_out, Matrix& d_weights, std::span<double> d_bias);
void affine_backward_input(const Matrix& d_out, const Matrix& weights, Matrix& d_in);
void tanh_inplace(Matrix& m);
void tanh_backward(const Matrix& act, Matrix& grad);
void softmax_rows(const Matrix& logits, Matrix& probs);

}  // namespace omp

}  // namespace loyalty::kernels

#include <algorithm>
#include <cmath>

#include "loyalty/kernels.hpp"

namespace loyalty::kernels::serial {

void affine_forward(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
  out = Matrix(in.rows, weights.cols);
  for (std::size_t r = 0; r < in.rows; ++r) {
    for (std::size_t j = 0; j < weights.cols; ++j) {
      double acc = bias[j];
      for (std::size_t k = 0; k < in.cols; ++k) acc += in(r, k) * weights(k, j);
      out(r, j) = acc;
    }
  }
}

void affine_backward_params(const Matrix& in, const Matrix& d_out, Matrix& d_weights, std::span<double> d_bias) {
  d_weights = Matrix(in.cols, d_out.cols);
  for (std::size_t k = 0; k < in.cols; ++k) {
    for (std::size_t j = 0; j < d_out.cols; ++j) {
      double acc = 0.0;
      for (std::size_t r = 0; r < in.rows; ++r) acc += in(r, k) * d_out(r, j);
      d_weights(k, j) = acc;
    }
  }
  for (std::size_t j = 0; j < d_out.cols; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < d_out.rows; ++r) acc += d_out(r, j);
    d_bias[j] = acc;
  }
}

void affine_backward_input(const Matrix& d_out, const Matrix& weights, Matrix& d_in) {
  d_in = Matrix(d_out.rows, weights.rows);
  for (std::size_t r = 0; r < d_out.rows; ++r) {
    for (std::size_t k = 0; k < weights.rows; ++k) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d_out.cols; ++j) acc += d_out(r, j) * weights(k, j);
      d_in(r, k) = acc;
    }
  }
}

void tanh_inplace(Matrix& m) {
  for (double& v : m.data) v = std::tanh(v);
}

void tanh_backward(const Matrix& act, Matrix& grad) {
  for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] *= 1.0 - act.data[i] * act.data[i];
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows, logits.cols);
  for (std::size_t r = 0; r < logits.rows; ++r) {
    const auto z = logits.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      probs(r, j) = std::exp(z[j] - peak);
      total += probs(r, j);
    }
    for (std::size_t j = 0; j < z.size(); ++j) probs(r, j) /= total;
  }
}

}  // namespace loyalty::kernels::serial

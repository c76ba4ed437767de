#include <algorithm>
#include <cmath>

#include "loyalty/kernels.hpp"

// Loop orders differ from the serial reference for locality, but each output
// entry still sums its terms in ascending index order.
namespace loyalty::kernels::omp {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

std::ptrdiff_t signed_size(std::size_t n) { return static_cast<std::ptrdiff_t>(n); }

}  // namespace

void affine_forward(const Matrix& in, const Matrix& weights, std::span<const double> bias, Matrix& out) {
  out = Matrix(in.rows, weights.cols);
  const std::size_t fan_in = in.cols;
  const std::size_t fan_out = weights.cols;
  const bool parallel = in.rows * fan_in * fan_out >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t rs = 0; rs < signed_size(in.rows); ++rs) {
    const auto r = static_cast<std::size_t>(rs);
    double* dst = out.data.data() + r * fan_out;
    for (std::size_t j = 0; j < fan_out; ++j) dst[j] = bias[j];
    const double* src = in.data.data() + r * fan_in;
    for (std::size_t k = 0; k < fan_in; ++k) {
      const double x = src[k];
      const double* w = weights.data.data() + k * fan_out;
      for (std::size_t j = 0; j < fan_out; ++j) dst[j] += x * w[j];
    }
  }
}

void affine_backward_params(const Matrix& in, const Matrix& d_out, Matrix& d_weights, std::span<double> d_bias) {
  const std::size_t fan_in = in.cols;
  const std::size_t fan_out = d_out.cols;
  d_weights = Matrix(fan_in, fan_out);
  const bool parallel = in.rows * fan_in * fan_out >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t ks = 0; ks < signed_size(fan_in); ++ks) {
    const auto k = static_cast<std::size_t>(ks);
    double* dst = d_weights.data.data() + k * fan_out;
    for (std::size_t r = 0; r < in.rows; ++r) {
      const double x = in.data[r * fan_in + k];
      const double* g = d_out.data.data() + r * fan_out;
      for (std::size_t j = 0; j < fan_out; ++j) dst[j] += x * g[j];
    }
  }
  std::fill(d_bias.begin(), d_bias.end(), 0.0);
  for (std::size_t r = 0; r < d_out.rows; ++r) {
    for (std::size_t j = 0; j < fan_out; ++j) d_bias[j] += d_out(r, j);
  }
}

void affine_backward_input(const Matrix& d_out, const Matrix& weights, Matrix& d_in) {
  const std::size_t fan_in = weights.rows;
  const std::size_t fan_out = weights.cols;
  d_in = Matrix(d_out.rows, fan_in);
  const bool parallel = d_out.rows * fan_in * fan_out >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t rs = 0; rs < signed_size(d_out.rows); ++rs) {
    const auto r = static_cast<std::size_t>(rs);
    const double* g = d_out.data.data() + r * fan_out;
    double* dst = d_in.data.data() + r * fan_in;
    for (std::size_t k = 0; k < fan_in; ++k) {
      const double* w = weights.data.data() + k * fan_out;
      double acc = 0.0;
      for (std::size_t j = 0; j < fan_out; ++j) acc += g[j] * w[j];
      dst[k] = acc;
    }
  }
}

void tanh_inplace(Matrix& m) {
  const bool parallel = m.data.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < signed_size(m.data.size()); ++i) m.data[static_cast<std::size_t>(i)] = std::tanh(m.data[static_cast<std::size_t>(i)]);
}

void tanh_backward(const Matrix& act, Matrix& grad) {
  const bool parallel = grad.data.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t is = 0; is < signed_size(grad.data.size()); ++is) {
    const auto i = static_cast<std::size_t>(is);
    grad.data[i] *= 1.0 - act.data[i] * act.data[i];
  }
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
  probs = Matrix(logits.rows, logits.cols);
  const bool parallel = logits.data.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t rs = 0; rs < signed_size(logits.rows); ++rs) {
    const auto r = static_cast<std::size_t>(rs);
    const auto z = logits.row(r);
    auto p = probs.row(r);
    const double peak = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] = std::exp(z[j] - peak);
      total += p[j];
    }
    for (std::size_t j = 0; j < z.size(); ++j) p[j] /= total;
  }
}

}  // namespace loyalty::kernels::omp

#pragma once

#include <random>

#include "loyalty/matrix.hpp"
#include "loyalty/network.hpp"

namespace testing_support {

inline loyalty::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> dist(0.0, scale);
  loyalty::Matrix m(rows, cols);
  for (auto& x : m.data) x = dist(rng);
  return m;
}

inline std::vector<int> random_labels(std::size_t n, std::mt19937_64& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng() & 1);
  return y;
}

// A small random network with inputs and labels, for gradient checks. Case k
// cycles through the three modalities and varies every width.
struct NetCase {
  loyalty::MLPParams params;
  loyalty::Matrix x1, x2;
  std::vector<int> labels;
};

inline NetCase random_net_case(std::uint64_t k) {
  std::mt19937_64 rng(1000 + k);
  auto width = [&](std::size_t lo, std::size_t hi) { return lo + static_cast<std::size_t>(rng() % (hi - lo + 1)); };
  loyalty::NetworkDims dims;
  dims.modality = static_cast<loyalty::Modality>(k % 3);
  dims.d_text = width(2, 7);
  dims.j_in = width(1, 5);
  dims.x2_hidden.assign(width(1, 2), 0);
  for (auto& w : dims.x2_hidden) w = width(2, 6);
  dims.out_hidden.assign(width(1, 3), 0);
  for (auto& w : dims.out_hidden) w = width(2, 6);
  NetCase c;
  c.params = loyalty::init_params(dims, k);
  // Non-zero biases so their gradients are exercised away from the init point.
  for (auto& layer : c.params.x2_layers) {
    for (auto& b : layer.biases) b = std::normal_distribution<double>(0, 0.3)(rng);
  }
  for (auto& layer : c.params.out_layers) {
    for (auto& b : layer.biases) b = std::normal_distribution<double>(0, 0.3)(rng);
  }
  const std::size_t n = 4;
  c.x1 = random_matrix(n, dims.d_text, rng, 0.5);
  c.x2 = random_matrix(n, dims.j_in, rng);
  c.labels = random_labels(n, rng);
  return c;
}

}  // namespace testing_support

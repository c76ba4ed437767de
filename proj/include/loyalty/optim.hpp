#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/network.hpp"

namespace loyalty {

enum class OptimizerKind { adam, adamax, nadam };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view to_string(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// adam / nadam: lr 0.001; adamax: lr 0.002; beta1 0.9, beta2 0.999, eps 1e-8.
OptimizerConfig default_config(OptimizerKind kind);

// Moments shaped like the parameter tensors. For Adamax `v` holds the
// exponentially weighted infinity norm u.
struct OptimizerState {
  std::uint64_t t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

OptimizerState make_state(std::span<const std::span<const double>> tensors);
OptimizerState make_state(const MLPParams& params);

// One update of every tensor. t is incremented first and the bias
// corrections use the new t:
//   adam   m = b1 m + (1-b1) g,  v = b2 v + (1-b2) g^2,
//          theta -= lr * mhat / (sqrt(vhat) + eps)
//   adamax u = max(b2 u, |g|),   theta -= lr / (1 - b1^t) * m / u   (skipped where u = 0)
//   nadam  as adam with mhat replaced by b1 mhat + (1-b1) g / (1 - b1^t)
// Throws RuntimeFailure naming the first non-finite gradient entry, before
// touching any state.
void step(OptimizerState& state, std::span<const std::span<double>> params,
          std::span<const std::span<const double>> grads, const OptimizerConfig& cfg,
          std::span<const std::string> names = {});

void step(OptimizerState& state, MLPParams& params, const Gradients& grads, const OptimizerConfig& cfg);

}  // namespace loyalty

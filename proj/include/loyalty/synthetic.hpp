#pragma once

#include <array>
#include <cstdint>

#include "loyalty/data_model.hpp"

namespace loyalty {

// Generative stand-in for a review + profile survey. Each record has a latent
// heterogeneity class h (uniform over four) with text signal mu_h in
// {-1.5, -0.5, 0.5, 1.5}, visible only through the class vocabulary of its
// review text, and a tabular signal s ~ N(0, 1) stored as feature f0 next to
// j_in - 1 pure-noise features. The label is
//   y = 1  iff  text_weight * mu_h + tabular_weight * s + noise * eps > 0,
// eps ~ N(0, 1), and is rendered as a rating in 6..7 (y = 1) or 1..5 (y = 0).
struct SyntheticSpec {
  std::size_t n = 2000;
  std::size_t j_in = 6;
  double text_weight = 1.0;     // a
  double tabular_weight = 1.0;  // b
  double noise = 0.5;           // sigma
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr std::array<double, 4> kTextSignal = {-1.5, -0.5, 0.5, 1.5};

// Accuracies of the Bayes-optimal classifier with access to each view, and
// P(y = 1).
struct BayesAccuracy {
  double text_only = 0.0;
  double tabular_only = 0.0;
  double combined = 0.0;
  double class_prior = 0.0;
};

BayesAccuracy bayes_accuracy(const SyntheticSpec& spec);

struct SyntheticData {
  Dataset dataset;
  BayesAccuracy bayes;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace loyalty

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "loyalty/error.hpp"
#include "loyalty/network.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace loyalty;
using testing_support::random_labels;
using testing_support::random_matrix;

namespace {

NetworkDims dims_for(Modality m, std::size_t d_text = 200, std::size_t j_in = 6) {
  NetworkDims d;
  d.modality = m;
  d.d_text = d_text;
  d.j_in = j_in;
  return d;
}

MLPParams zeroed(MLPParams p) {
  for (auto t : p.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return p;
}

}  // namespace

TEST(Modality, ParseAndPredicates) {
  EXPECT_EQ(parse_modality("both"), Modality::Both);
  EXPECT_EQ(parse_modality("X1"), Modality::X1);
  EXPECT_EQ(parse_modality("x2"), Modality::X2);
  EXPECT_THROW(parse_modality("X3"), UsageError);
  EXPECT_TRUE(uses_text(Modality::Both) && uses_profile(Modality::Both));
  EXPECT_FALSE(uses_profile(Modality::X1));
  EXPECT_FALSE(uses_text(Modality::X2));
}

TEST(Dims, FusedWidth) {
  EXPECT_EQ(dims_for(Modality::Both).fused_width(), 210u);
  EXPECT_EQ(dims_for(Modality::X1).fused_width(), 200u);
  EXPECT_EQ(dims_for(Modality::X2).fused_width(), 10u);
  EXPECT_EQ(init_params(dims_for(Modality::Both), 1).out_layers.front().fan_in(), 210u);
}

TEST(Init, DeterministicGlorotZeroBiases) {
  const auto a = init_params(dims_for(Modality::Both), 9);
  EXPECT_EQ(a, init_params(dims_for(Modality::Both), 9));
  EXPECT_NE(a, init_params(dims_for(Modality::Both), 10));
  for (const auto* layers : {&a.x2_layers, &a.out_layers}) {
    for (const auto& l : *layers) {
      const double bound = std::sqrt(6.0 / static_cast<double>(l.fan_in() + l.fan_out()));
      for (double w : l.weights.data) EXPECT_LE(std::abs(w), bound);
      for (double b : l.biases) EXPECT_EQ(b, 0.0);
    }
  }
  // The 10x10 hidden layer: bound sqrt(6/20).
  EXPECT_EQ(a.x2_layers[1].fan_in(), 10u);
  for (double w : a.x2_layers[1].weights.data) EXPECT_LE(std::abs(w), 0.5477226);
  EXPECT_EQ(a.out_layers.size(), 3u);
  EXPECT_EQ(a.out_layers.back().fan_out(), 2u);
  EXPECT_EQ(a.parameter_count(), (6 * 10 + 10) + (10 * 10 + 10) + (210 * 10 + 10) + (10 * 10 + 10) + (10 * 2 + 2));
}

TEST(Init, ZeroWidthLayerRejected) {
  auto d = dims_for(Modality::Both);
  d.out_hidden = {10, 0};
  EXPECT_THROW(init_params(d, 1), UsageError);
}

TEST(Forward, ZeroParamsGiveHalfHalf) {
  const auto p = zeroed(init_params(dims_for(Modality::Both, 8, 3), 1));
  std::mt19937_64 rng(1);
  const auto trace = forward(p, random_matrix(5, 8, rng), random_matrix(5, 3, rng));
  for (double x : trace.probabilities.data) EXPECT_EQ(x, 0.5);
  const std::vector<int> y = {1, 0, 1, 1, 0};
  EXPECT_NEAR(loss(trace, y), 0.693147, 1e-6);
  EXPECT_DOUBLE_EQ(loss(trace, y), std::log(2.0));
  EXPECT_EQ(predict(trace), std::vector<int>(5, 0));
}

TEST(Forward, WidthMismatchIsError) {
  const auto p = init_params(dims_for(Modality::Both, 8, 3), 1);
  EXPECT_THROW(forward(p, Matrix(2, 7), Matrix(2, 3)), DataError);
  EXPECT_THROW(forward(p, Matrix(2, 8), Matrix(2, 4)), DataError);
  EXPECT_THROW(forward(p, Matrix(2, 8), Matrix(3, 3)), DataError);
}

TEST(Forward, ProbabilitiesWellFormed) {
  std::mt19937_64 rng(2);
  auto p = init_params(dims_for(Modality::Both, 20, 4), 2);
  for (auto t : p.tensors()) {
    for (auto& x : t) x *= 40;  // saturate tanh and push logits far apart
  }
  const auto trace = forward(p, random_matrix(50, 20, rng, 3), random_matrix(50, 4, rng, 3));
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_NEAR(trace.probabilities(r, 0) + trace.probabilities(r, 1), 1.0, 1e-12);
  }
}

TEST(Loss, ClampAndMean) {
  ForwardTrace t;
  t.probabilities = Matrix(2, 2);
  t.probabilities.data = {0.0, 1.0, 0.2, 0.8};
  const std::vector<int> y1 = {1, 1};
  EXPECT_NEAR(loss(t, y1), -std::log(0.8) / 2, 1e-12);
  const std::vector<int> y0 = {0, 0};
  const double a = -std::log(1e-12), b = -std::log(0.2);
  EXPECT_NEAR(loss(t, y0), (a + b) / 2, 1e-9);
  const std::vector<int> bad = {2, 0};
  EXPECT_THROW(loss(t, bad), DataError);
}

TEST(Predict, ArgmaxTieToZeroAndAccuracy) {
  ForwardTrace t;
  t.probabilities = Matrix(3, 2);
  t.probabilities.data = {0.7, 0.3, 0.3, 0.7, 0.5, 0.5};
  EXPECT_EQ(predict(t), (std::vector<int>{0, 1, 0}));
  const std::vector<int> pred = {1, 1, 0, 0}, labels = {1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(accuracy(pred, labels), 0.75);
  EXPECT_THROW(accuracy(std::vector<int>{}, std::vector<int>{}), DataError);
}

TEST(Backward, HeadDeltaIsPMinusOneHot) {
  // With no hidden layers and zero weights the head's bias gradient is p - y.
  NetworkDims d = dims_for(Modality::X1, 3, 0);
  d.out_hidden = {};
  auto p = zeroed(init_params(d, 1));
  p.out_layers[0].biases = {0.3, -0.2};
  Matrix x1(1, 3, 0.0);
  const auto trace = forward(p, x1, Matrix());
  const std::vector<int> y = {1};
  const auto g = backward(p, trace, y);
  EXPECT_NEAR(g.out_layers[0].biases[0], trace.probabilities(0, 0) - 0.0, 1e-15);
  EXPECT_NEAR(g.out_layers[0].biases[1], trace.probabilities(0, 1) - 1.0, 1e-15);
}

TEST(Backward, ZeroGradientWhenTrueClassCertain) {
  NetworkDims d = dims_for(Modality::X1, 2, 0);
  d.out_hidden = {};
  auto p = zeroed(init_params(d, 1));
  p.out_layers[0].biases = {-400, 400};  // p(class 1) == 1 exactly in double
  const auto trace = forward(p, Matrix(1, 2, 0.5), Matrix());
  ASSERT_EQ(trace.probabilities(0, 1), 1.0);
  const auto g = backward(p, trace, std::vector<int>{1});
  for (auto t : g.tensors()) {
    for (double x : t) EXPECT_EQ(std::abs(x), 0.0);
  }
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
  for (std::uint64_t k = 0; k < 24; ++k) {
    const auto c = testing_support::random_net_case(k);
    const auto trace = forward(c.params, c.x1, c.x2);
    const auto g = backward(c.params, trace, c.labels);
    EXPECT_LT(oracle::max_fd_relative_error(c.params, g, c.x1, c.x2, c.labels), 1e-4)
        << "case " << k << " modality " << to_string(c.params.modality);
  }
}

TEST(Forward, UnusedModalityIsIgnored) {
  std::mt19937_64 rng(4);
  const auto x1 = random_matrix(6, 5, rng);
  const auto x2 = random_matrix(6, 3, rng);
  const auto p1 = init_params(dims_for(Modality::X1, 5, 3), 4);
  EXPECT_EQ(forward(p1, x1, x2).probabilities, forward(p1, x1, random_matrix(6, 3, rng, 1e6)).probabilities);
  EXPECT_EQ(forward(p1, x1, x2).probabilities, forward(p1, x1, Matrix()).probabilities);
  const auto p2 = init_params(dims_for(Modality::X2, 5, 3), 4);
  EXPECT_EQ(forward(p2, x1, x2).probabilities, forward(p2, random_matrix(6, 5, rng, 1e6), x2).probabilities);
  EXPECT_EQ(forward(p2, x1, x2).probabilities, forward(p2, Matrix(), x2).probabilities);
}

TEST(Forward, PermutationEquivariance) {
  std::mt19937_64 rng(5);
  const auto p = init_params(dims_for(Modality::Both, 7, 4), 5);
  const auto x1 = random_matrix(9, 7, rng);
  const auto x2 = random_matrix(9, 4, rng);
  const auto y = random_labels(9, rng);
  std::vector<std::size_t> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> y_perm;
  for (auto i : perm) y_perm.push_back(y[i]);
  const auto base = forward(p, x1, x2);
  const auto permuted = forward(p, gather_rows(x1, perm), gather_rows(x2, perm));
  const auto pred = predict(base), pred_perm = predict(permuted);
  for (std::size_t i = 0; i < 9; ++i) {
    EXPECT_EQ(pred_perm[i], pred[perm[i]]);
    EXPECT_EQ(permuted.probabilities(i, 1), base.probabilities(perm[i], 1));
  }
  EXPECT_NEAR(loss(permuted, y_perm), loss(base, y), 1e-12);
}

TEST(Checkpoint, RoundTripBitExact) {
  for (auto m : {Modality::Both, Modality::X1, Modality::X2}) {
    auto d = dims_for(m, 12, 5);
    d.x2_hidden = {7};
    d.out_hidden = {4, 3, 5};
    const auto p = init_params(d, 77);
    const auto bytes = serialize_params(p);
    EXPECT_EQ(bytes.substr(0, 4), "MLP1");
    EXPECT_EQ(deserialize_params(bytes), p);
    EXPECT_THROW(deserialize_params(bytes.substr(0, bytes.size() - 3)), DataError);
    EXPECT_THROW(deserialize_params("MLP2" + bytes.substr(4)), DataError);
    EXPECT_THROW(deserialize_params(bytes + "z"), DataError);
  }
  const auto p = init_params(dims_for(Modality::Both), 1);
  const auto path = std::filesystem::temp_directory_path() / "loyalty_ckpt_test.mlp";
  save_params(p, path.string());
  EXPECT_EQ(load_params(path.string()), p);
  std::filesystem::remove(path);
}

TEST(Params, TensorNamesAlignWithTensors) {
  const auto p = init_params(dims_for(Modality::Both, 4, 2), 1);
  const auto names = p.tensor_names();
  ASSERT_EQ(names.size(), p.tensors().size());
  EXPECT_EQ(names.back(), "out_layers[2].biases");
  EXPECT_EQ(names.front(), "x2_layers[0].weights");
  const auto z = p.zeros_like();
  for (auto t : z.tensors()) {
    for (double x : t) EXPECT_EQ(x, 0.0);
  }
}

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "loyalty/matrix.hpp"

namespace loyalty {

// Which inputs feed the output subnet: the frozen text feature map (X1), the
// profile-feature subnet (X2), or both concatenated as [X1 | X2].
enum class Modality { Both, X1, X2 };

Modality parse_modality(std::string_view name);
std::string_view to_string(Modality modality);
bool uses_text(Modality modality);
bool uses_profile(Modality modality);

struct LayerParams {
  Matrix weights;  // fan_in x fan_out
  std::vector<double> biases;

  std::size_t fan_in() const { return weights.rows; }
  std::size_t fan_out() const { return weights.cols; }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

struct NetworkDims {
  Modality modality = Modality::Both;
  std::size_t d_text = 200;
  std::size_t j_in = 0;
  std::vector<std::size_t> x2_hidden{10, 10};
  std::vector<std::size_t> out_hidden{10, 10};

  // Width of the profile subnet output (j_in when it has no layers).
  std::size_t j_out() const;
  std::size_t fused_width() const;
};

// Trainable state. The text encoder is frozen and lives outside. out_layers
// ends with the 2-unit softmax head.
struct MLPParams {
  Modality modality = Modality::Both;
  std::size_t d_text = 0;
  std::size_t j_in = 0;
  std::vector<LayerParams> x2_layers;
  std::vector<LayerParams> out_layers;

  NetworkDims dims() const;
  std::size_t fused_width() const;
  std::size_t parameter_count() const;

  // Every weight and bias array, in checkpoint order, with a readable path
  // such as "out_layers[2].biases".
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
  std::vector<std::string> tensor_names() const;

  // Same shapes, all zeros.
  MLPParams zeros_like() const;

  friend bool operator==(const MLPParams&, const MLPParams&) = default;
};

using Gradients = MLPParams;

// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
// Throws UsageError on a zero-width layer.
MLPParams init_params(const NetworkDims& dims, std::uint64_t seed);

struct ForwardTrace {
  std::vector<Matrix> x2_acts;   // [0] is the profile input, then each tanh output
  std::vector<Matrix> out_acts;  // [0] is the fused input, then each hidden tanh output
  Matrix logits;
  Matrix probabilities;  // n x 2

  std::size_t batch_size() const { return probabilities.rows; }
};

// Unused modality inputs are never read and may be empty.
ForwardTrace forward(const MLPParams& params, const Matrix& x1_batch, const Matrix& x2_batch);

inline constexpr double kProbabilityClamp = 1e-12;

// Mean over the batch of -ln p(true class), with p clamped to
// [1e-12, 1 - 1e-12]. Two-class softmax with this loss is the same model as a
// sigmoid unit with binary cross-entropy.
double loss(const ForwardTrace& trace, std::span<const int> labels);

// Exact gradients of loss() (without the clamp) for every trainable tensor.
Gradients backward(const MLPParams& params, const ForwardTrace& trace, std::span<const int> labels);

// Argmax of each probability row; an exact tie goes to class 0.
std::vector<int> predict(const ForwardTrace& trace);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

// Versioned binary checkpoint: "MLP1", u8 modality, u32 d_text, u32 j_in,
// u32 count + widths for each subnet, then float64 weights and biases in
// layer order (profile subnet first). Little-endian throughout.
std::string serialize_params(const MLPParams& params);
MLPParams deserialize_params(std::string_view bytes);
void save_params(const MLPParams& params, const std::string& path);
MLPParams load_params(const std::string& path);

}  // namespace loyalty

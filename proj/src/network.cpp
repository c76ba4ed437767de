#include "loyalty/network.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "loyalty/error.hpp"
#include "loyalty/kernels.hpp"
#include "loyalty/rng.hpp"

namespace loyalty {

namespace k = kernels::omp;

Modality parse_modality(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "both") return Modality::Both;
  if (lower == "x1") return Modality::X1;
  if (lower == "x2") return Modality::X2;
  throw UsageError("unknown modality '" + std::string(name) + "' (expected Both, X1 or X2)");
}

std::string_view to_string(Modality modality) {
  switch (modality) {
    case Modality::Both: return "Both";
    case Modality::X1: return "X1";
    case Modality::X2: return "X2";
  }
  return "?";
}

bool uses_text(Modality modality) { return modality != Modality::X2; }
bool uses_profile(Modality modality) { return modality != Modality::X1; }

std::size_t NetworkDims::j_out() const { return x2_hidden.empty() ? j_in : x2_hidden.back(); }

std::size_t NetworkDims::fused_width() const {
  return (uses_text(modality) ? d_text : 0) + (uses_profile(modality) ? j_out() : 0);
}

NetworkDims MLPParams::dims() const {
  NetworkDims d;
  d.modality = modality;
  d.d_text = d_text;
  d.j_in = j_in;
  d.x2_hidden.clear();
  for (const auto& l : x2_layers) d.x2_hidden.push_back(l.fan_out());
  d.out_hidden.clear();
  for (std::size_t i = 0; i + 1 < out_layers.size(); ++i) d.out_hidden.push_back(out_layers[i].fan_out());
  return d;
}

std::size_t MLPParams::fused_width() const { return dims().fused_width(); }

std::size_t MLPParams::parameter_count() const {
  std::size_t total = 0;
  for (auto t : tensors()) total += t.size();
  return total;
}

std::vector<std::span<double>> MLPParams::tensors() {
  std::vector<std::span<double>> out;
  for (auto* layers : {&x2_layers, &out_layers}) {
    for (auto& l : *layers) {
      out.emplace_back(l.weights.data);
      out.emplace_back(l.biases);
    }
  }
  return out;
}

std::vector<std::span<const double>> MLPParams::tensors() const {
  std::vector<std::span<const double>> out;
  for (const auto* layers : {&x2_layers, &out_layers}) {
    for (const auto& l : *layers) {
      out.emplace_back(l.weights.data);
      out.emplace_back(l.biases);
    }
  }
  return out;
}

std::vector<std::string> MLPParams::tensor_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < x2_layers.size(); ++i) {
    out.push_back("x2_layers[" + std::to_string(i) + "].weights");
    out.push_back("x2_layers[" + std::to_string(i) + "].biases");
  }
  for (std::size_t i = 0; i < out_layers.size(); ++i) {
    out.push_back("out_layers[" + std::to_string(i) + "].weights");
    out.push_back("out_layers[" + std::to_string(i) + "].biases");
  }
  return out;
}

MLPParams MLPParams::zeros_like() const {
  MLPParams z = *this;
  for (auto t : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
  return z;
}

namespace {

LayerParams make_layer(std::size_t fan_in, std::size_t fan_out, Engine& rng) {
  if (fan_in == 0 || fan_out == 0) throw UsageError("zero-width layer in network dimensions");
  LayerParams layer;
  layer.weights = Matrix(fan_in, fan_out);
  layer.biases.assign(fan_out, 0.0);
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& w : layer.weights.data) w = uniform(rng, -bound, bound);
  return layer;
}

void check_labels(std::span<const int> labels, std::size_t n) {
  if (labels.size() != n) {
    throw DataError("labels: expected " + std::to_string(n) + ", got " + std::to_string(labels.size()));
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("label " + std::to_string(y) + " not in {0, 1}");
  }
}

Matrix concat_columns(const Matrix& left, const Matrix& right) {
  Matrix out(left.rows, left.cols + right.cols);
  for (std::size_t r = 0; r < left.rows; ++r) {
    auto dst = out.row(r);
    const auto a = left.row(r);
    const auto b = right.row(r);
    std::copy(a.begin(), a.end(), dst.begin());
    std::copy(b.begin(), b.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
  }
  return out;
}

Matrix column_slice(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(m.rows, count);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const auto src = m.row(r).subspan(first, count);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

MLPParams init_params(const NetworkDims& dims, std::uint64_t seed) {
  if (uses_text(dims.modality) && dims.d_text == 0) throw UsageError("d_text must be positive for text modalities");
  if (uses_profile(dims.modality) && dims.j_in == 0) throw UsageError("j_in must be positive for profile modalities");
  Engine rng(derive_seed(seed, "init"));
  MLPParams p;
  p.modality = dims.modality;
  p.d_text = uses_text(dims.modality) ? dims.d_text : 0;
  p.j_in = uses_profile(dims.modality) ? dims.j_in : 0;
  if (uses_profile(dims.modality)) {
    std::size_t fan_in = dims.j_in;
    for (auto width : dims.x2_hidden) {
      p.x2_layers.push_back(make_layer(fan_in, width, rng));
      fan_in = width;
    }
  }
  std::size_t fan_in = dims.fused_width();
  for (auto width : dims.out_hidden) {
    p.out_layers.push_back(make_layer(fan_in, width, rng));
    fan_in = width;
  }
  p.out_layers.push_back(make_layer(fan_in, 2, rng));
  return p;
}

ForwardTrace forward(const MLPParams& params, const Matrix& x1_batch, const Matrix& x2_batch) {
  const bool text = uses_text(params.modality);
  const bool profile = uses_profile(params.modality);
  if (text && x1_batch.cols != params.d_text) {
    throw DataError("forward: text input width " + std::to_string(x1_batch.cols) + ", network expects " +
                    std::to_string(params.d_text));
  }
  if (profile && x2_batch.cols != params.j_in) {
    throw DataError("forward: profile input width " + std::to_string(x2_batch.cols) + ", network expects " +
                    std::to_string(params.j_in));
  }
  if (text && profile && x1_batch.rows != x2_batch.rows) {
    throw DataError("forward: text and profile batches differ in size");
  }

  ForwardTrace trace;
  if (profile) {
    trace.x2_acts.push_back(x2_batch);
    for (const auto& layer : params.x2_layers) {
      Matrix next;
      k::affine_forward(trace.x2_acts.back(), layer.weights, layer.biases, next);
      k::tanh_inplace(next);
      trace.x2_acts.push_back(std::move(next));
    }
  }
  switch (params.modality) {
    case Modality::Both: trace.out_acts.push_back(concat_columns(x1_batch, trace.x2_acts.back())); break;
    case Modality::X1: trace.out_acts.push_back(x1_batch); break;
    case Modality::X2: trace.out_acts.push_back(trace.x2_acts.back()); break;
  }
  for (std::size_t i = 0; i < params.out_layers.size(); ++i) {
    const auto& layer = params.out_layers[i];
    Matrix next;
    k::affine_forward(trace.out_acts.back(), layer.weights, layer.biases, next);
    if (i + 1 == params.out_layers.size()) {
      trace.logits = std::move(next);
    } else {
      k::tanh_inplace(next);
      trace.out_acts.push_back(std::move(next));
    }
  }
  k::softmax_rows(trace.logits, trace.probabilities);
  return trace;
}

double loss(const ForwardTrace& trace, std::span<const int> labels) {
  const std::size_t n = trace.batch_size();
  if (n == 0) throw DataError("loss: empty batch");
  check_labels(labels, n);
  double total = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double p = std::clamp(trace.probabilities(r, static_cast<std::size_t>(labels[r])), kProbabilityClamp,
                                1.0 - kProbabilityClamp);
    total -= std::log(p);
  }
  return total / static_cast<double>(n);
}

Gradients backward(const MLPParams& params, const ForwardTrace& trace, std::span<const int> labels) {
  const std::size_t n = trace.batch_size();
  if (n == 0) throw DataError("backward: empty batch");
  check_labels(labels, n);
  if (trace.out_acts.size() != params.out_layers.size() ||
      trace.x2_acts.size() != (uses_profile(params.modality) ? params.x2_layers.size() + 1 : 0)) {
    throw DataError("backward: trace does not match network shape");
  }

  Gradients grads = params.zeros_like();

  // Softmax + cross-entropy: d(logit) = (p - one_hot(y)) / n.
  Matrix delta = trace.probabilities;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r) {
    delta(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (std::size_t j = 0; j < delta.cols; ++j) delta(r, j) *= inv_n;
  }

  // delta holds d(loss)/d(pre-activation) of the current layer.
  Matrix d_input;
  for (std::size_t i = params.out_layers.size(); i-- > 0;) {
    const auto& layer = params.out_layers[i];
    auto& g = grads.out_layers[i];
    k::affine_backward_params(trace.out_acts[i], delta, g.weights, g.biases);
    k::affine_backward_input(delta, layer.weights, d_input);
    if (i > 0) {
      k::tanh_backward(trace.out_acts[i], d_input);
      delta = std::move(d_input);
    }
  }
  // d_input is now the gradient of the fused representation. The text part
  // belongs to the frozen encoder and is dropped.
  if (!uses_profile(params.modality) || params.x2_layers.empty()) return grads;
  const std::size_t offset = params.modality == Modality::Both ? params.d_text : 0;
  delta = column_slice(d_input, offset, params.x2_layers.back().fan_out());
  for (std::size_t i = params.x2_layers.size(); i-- > 0;) {
    k::tanh_backward(trace.x2_acts[i + 1], delta);
    auto& g = grads.x2_layers[i];
    k::affine_backward_params(trace.x2_acts[i], delta, g.weights, g.biases);
    if (i > 0) {
      k::affine_backward_input(delta, params.x2_layers[i].weights, d_input);
      delta = std::move(d_input);
    }
  }
  return grads;
}

std::vector<int> predict(const ForwardTrace& trace) {
  std::vector<int> out(trace.batch_size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = trace.probabilities(r, 1) > trace.probabilities(r, 0) ? 1 : 0;
  return out;
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.empty()) throw DataError("accuracy: empty evaluation set");
  if (predictions.size() != labels.size()) throw DataError("accuracy: predictions and labels differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

namespace {

constexpr std::string_view kCheckpointMagic = "MLP1";

void put_uint(std::string& out, std::uint64_t v, int width) {
  for (int b = 0; b < width; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}

struct CheckpointReader {
  std::string_view bytes;
  std::size_t pos = 0;

  std::uint64_t uint(int width) {
    if (bytes.size() - pos < static_cast<std::size_t>(width)) throw DataError("checkpoint: truncated");
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= std::uint64_t{static_cast<unsigned char>(bytes[pos + b])} << (8 * b);
    pos += static_cast<std::size_t>(width);
    return v;
  }
};

}  // namespace

std::string serialize_params(const MLPParams& params) {
  std::string out(kCheckpointMagic);
  put_uint(out, static_cast<std::uint64_t>(params.modality), 1);
  put_uint(out, params.d_text, 4);
  put_uint(out, params.j_in, 4);
  for (const auto* layers : {&params.x2_layers, &params.out_layers}) {
    put_uint(out, layers->size(), 4);
    for (const auto& l : *layers) put_uint(out, l.fan_out(), 4);
  }
  for (auto t : params.tensors()) {
    for (double v : t) put_uint(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  return out;
}

MLPParams deserialize_params(std::string_view bytes) {
  if (!bytes.starts_with(kCheckpointMagic)) throw DataError("checkpoint: bad magic number (expected MLP1)");
  CheckpointReader in{bytes, kCheckpointMagic.size()};
  const auto tag = in.uint(1);
  if (tag > 2) throw DataError("checkpoint: unknown modality tag " + std::to_string(tag));
  NetworkDims dims;
  dims.modality = static_cast<Modality>(tag);
  dims.d_text = in.uint(4);
  dims.j_in = in.uint(4);
  auto read_widths = [&] {
    const auto count = in.uint(4);
    if (count > 4096) throw DataError("checkpoint: implausible layer count");
    std::vector<std::size_t> widths;
    for (std::uint64_t i = 0; i < count; ++i) widths.push_back(in.uint(4));
    return widths;
  };
  dims.x2_hidden = read_widths();
  auto out_widths = read_widths();
  if (out_widths.empty() || out_widths.back() != 2) throw DataError("checkpoint: output head must have width 2");
  out_widths.pop_back();
  dims.out_hidden = out_widths;
  if (!uses_profile(dims.modality) && !dims.x2_hidden.empty()) {
    throw DataError("checkpoint: text-only network with profile layers");
  }
  MLPParams params;
  try {
    params = init_params(dims, 0);
  } catch (const UsageError& e) {
    throw DataError(std::string("checkpoint: invalid dimensions: ") + e.what());
  }
  for (auto t : params.tensors()) {
    for (double& v : t) v = std::bit_cast<double>(in.uint(8));
  }
  if (in.pos != bytes.size()) throw DataError("checkpoint: trailing bytes");
  return params;
}

void save_params(const MLPParams& params, const std::string& path) {
  const auto bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RuntimeFailure("write failed for '" + path + "'");
}

MLPParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return deserialize_params(buffer.str());
}

}  // namespace loyalty

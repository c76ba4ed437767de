#include "loyalty/optim.hpp"

#include <algorithm>
#include <cmath>

#include "loyalty/error.hpp"

namespace loyalty {

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "adam" || name == "Adam") return OptimizerKind::adam;
  if (name == "adamax" || name == "Adamax") return OptimizerKind::adamax;
  if (name == "nadam" || name == "Nadam") return OptimizerKind::nadam;
  throw UsageError("unknown optimizer '" + std::string(name) + "' (expected adam, adamax or nadam)");
}

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::adamax: return "adamax";
    case OptimizerKind::nadam: return "nadam";
  }
  return "?";
}

void OptimizerConfig::validate() const {
  if (!(lr > 0.0)) throw UsageError("optimizer lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw UsageError("optimizer betas must lie in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw UsageError("optimizer epsilon must be positive");
}

OptimizerConfig default_config(OptimizerKind kind) {
  OptimizerConfig cfg;
  cfg.kind = kind;
  cfg.lr = kind == OptimizerKind::adamax ? 0.002 : 0.001;
  return cfg;
}

OptimizerState make_state(std::span<const std::span<const double>> tensors) {
  OptimizerState s;
  for (auto t : tensors) {
    s.m.emplace_back(t.size(), 0.0);
    s.v.emplace_back(t.size(), 0.0);
  }
  return s;
}

OptimizerState make_state(const MLPParams& params) {
  const auto tensors = params.tensors();
  return make_state(tensors);
}

void step(OptimizerState& state, std::span<const std::span<double>> params,
          std::span<const std::span<const double>> grads, const OptimizerConfig& cfg,
          std::span<const std::string> names) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw DataError("optimizer: parameter, gradient and state tensor counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].size() != grads[i].size() || params[i].size() != state.m[i].size()) {
      throw DataError("optimizer: shape mismatch in tensor " + std::to_string(i));
    }
    for (std::size_t j = 0; j < grads[i].size(); ++j) {
      if (!std::isfinite(grads[i][j])) {
        const std::string path = i < names.size() ? names[i] : "tensor " + std::to_string(i);
        throw RuntimeFailure("non-finite gradient at " + path + "[" + std::to_string(j) + "]");
      }
    }
  }

  state.t += 1;
  const auto t = static_cast<double>(state.t);
  const double b1 = cfg.beta1;
  const double b2 = cfg.beta2;
  const double m_correction = 1.0 - std::pow(b1, t);
  const double v_correction = 1.0 - std::pow(b2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i];
    const auto g = grads[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * g[j];
      switch (cfg.kind) {
        case OptimizerKind::adam: {
          v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
          const double m_hat = m[j] / m_correction;
          const double v_hat = v[j] / v_correction;
          theta[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
          break;
        }
        case OptimizerKind::adamax: {
          v[j] = std::max(b2 * v[j], std::abs(g[j]));
          if (v[j] > 0.0) theta[j] -= (cfg.lr / m_correction) * m[j] / v[j];
          break;
        }
        case OptimizerKind::nadam: {
          v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
          const double m_hat = m[j] / m_correction;
          const double m_bar = b1 * m_hat + (1.0 - b1) * g[j] / m_correction;
          const double v_hat = v[j] / v_correction;
          theta[j] -= cfg.lr * m_bar / (std::sqrt(v_hat) + cfg.epsilon);
          break;
        }
      }
    }
  }
}

void step(OptimizerState& state, MLPParams& params, const Gradients& grads, const OptimizerConfig& cfg) {
  const auto p = params.tensors();
  const auto g = grads.tensors();
  const auto names = params.tensor_names();
  step(state, p, g, cfg, names);
}

}  // namespace loyalty

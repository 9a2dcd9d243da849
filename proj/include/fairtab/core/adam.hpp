#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairtab/core/mlp.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates, one vector per parameter block.
/// Moments are allocated lazily on the first step.
struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long long t = 0;
};

/// One bias-corrected Adam update. Throws NumericError naming the first block with
/// a non-finite gradient; in that case nothing is modified.
inline void adam_step(AdamState& state, std::span<const ParamBlock> params, std::span<const GradBlock> grads,
                      double lr) {
  const auto& cfg = state.config;
  if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
    throw ConfigError("adam_step: betas must lie in [0, 1)");
  if (params.size() != grads.size()) throw ShapeError("adam_step: parameter/gradient block count differs");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (params[b].values.size() != grads[b].values.size())
      throw ShapeError("adam_step: block '" + params[b].name + "' size mismatch");
    for (double g : grads[b].values)
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in block '" + grads[b].name + "'");
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.values.size(), 0.0);
      state.v.emplace_back(p.values.size(), 0.0);
    }
  } else if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: optimizer state does not match parameter blocks");
  }

  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto& m = state.m[b];
    auto& v = state.v[b];
    auto p = params[b].values;
    auto g = grads[b].values;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace fairtab

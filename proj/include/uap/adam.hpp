#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace uap {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second moment estimates and step counter for one parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> u;
  std::uint64_t t = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t n, AdamConfig cfg) : m(n, 0.0), u(n, 0.0), config(cfg) {}
};

/// Bias-corrected Adam step. Advances `state` and returns the update
/// delta = -lr * m_hat / (sqrt(u_hat) + eps) to be added to the parameters.
std::vector<double> adam_update(AdamState& state, std::span<const double> grad);

/// Applies adam_update to `params` in place.
void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad);

}  // namespace uap

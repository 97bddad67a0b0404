#include "uap/adam.hpp"

#include <cmath>

#include "uap/errors.hpp"

namespace uap {

std::vector<double> adam_update(AdamState& state, std::span<const double> grad) {
  if (state.m.size() != grad.size() || state.u.size() != grad.size()) {
    throw InvalidInput("adam_update: gradient length does not match optimizer state");
  }
  const AdamConfig& cfg = state.config;
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double m_corr = 1.0 - std::pow(cfg.beta1, t);
  const double u_corr = 1.0 - std::pow(cfg.beta2, t);

  std::vector<double> delta(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.u[i] = cfg.beta2 * state.u[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / m_corr;
    const double u_hat = state.u[i] / u_corr;
    delta[i] = -cfg.learning_rate * m_hat / (std::sqrt(u_hat) + cfg.epsilon);
  }
  return delta;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw InvalidInput("adam_step: length mismatch");
  const std::vector<double> delta = adam_update(state, grad);
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += delta[i];
}

}  // namespace uap

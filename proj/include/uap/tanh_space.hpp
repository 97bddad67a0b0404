#pragma once

#include <span>
#include <vector>

namespace uap {

/// Guard that keeps arctanh arguments away from +-1.
inline constexpr double kTanhEpsilon = 1e-7;

/// Unconstrained representation of a [0,1] signal (or of a perturbation).
struct TanhVector {
  std::vector<double> values;
  double epsilon = kTanhEpsilon;

  std::size_t size() const { return values.size(); }
};

/// x' = arctanh((2x - 1)(1 - eps)); throws InvalidInput for entries outside [0,1].
TanhVector to_tanh_space(std::span<const double> x, double epsilon = kTanhEpsilon);

/// w = (tanh(x' + v') + 1) / 2, always strictly inside (0,1) for finite inputs.
std::vector<double> perturbed_sample(const TanhVector& x_tanh, std::span<const double> v_tanh);

/// v' = ln(w / (1 - w)) / 2 - x'. Throws SingularityError at w == 0 or w == 1.
TanhVector recover_vprime(std::span<const double> w, const TanhVector& x_tanh);

/// Signal-space rendering v = (tanh(v') + 1 - eps) / (2 - 2 eps).
std::vector<double> render_signal_v(std::span<const double> v_tanh, double epsilon = kTanhEpsilon);

/// Elementwise dw/dv' = 2 w (1 - w) evaluated at a perturbed sample w.
std::vector<double> perturbed_sample_jacobian(std::span<const double> w);

}  // namespace uap

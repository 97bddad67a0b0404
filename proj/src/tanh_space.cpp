#include "uap/tanh_space.hpp"

#include <algorithm>
#include <cmath>

#include "uap/errors.hpp"

namespace uap {

namespace {

double guarded_arctanh(double z) { return 0.5 * std::log((1.0 + z) / (1.0 - z)); }

}  // namespace

TanhVector to_tanh_space(std::span<const double> x, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("tanh epsilon must lie in (0,1)");
  TanhVector out;
  out.epsilon = epsilon;
  out.values.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) throw InvalidInput("to_tanh_space: entry outside [0,1]");
    out.values[i] = guarded_arctanh((2.0 * x[i] - 1.0) * (1.0 - epsilon));
  }
  return out;
}

std::vector<double> perturbed_sample(const TanhVector& x_tanh, std::span<const double> v_tanh) {
  if (x_tanh.size() != v_tanh.size()) throw InvalidInput("perturbed_sample: length mismatch");
  std::vector<double> w(v_tanh.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = 0.5 * (std::tanh(x_tanh.values[i] + v_tanh[i]) + 1.0);
  }
  return w;
}

TanhVector recover_vprime(std::span<const double> w, const TanhVector& x_tanh) {
  if (x_tanh.size() != w.size()) throw InvalidInput("recover_vprime: length mismatch");
  TanhVector out;
  out.epsilon = x_tanh.epsilon;
  out.values.resize(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0 && w[i] < 1.0)) throw SingularityError("recover_vprime: entry not in (0,1)");
    out.values[i] = 0.5 * std::log(w[i] / (1.0 - w[i])) - x_tanh.values[i];
  }
  return out;
}

std::vector<double> render_signal_v(std::span<const double> v_tanh, double epsilon) {
  std::vector<double> v(v_tanh.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // The raw formula overshoots [0,1] by eps/(2-2eps) at saturation.
    const double raw = (std::tanh(v_tanh[i]) + 1.0 - epsilon) / (2.0 - 2.0 * epsilon);
    v[i] = std::clamp(raw, 0.0, 1.0);
  }
  return v;
}

std::vector<double> perturbed_sample_jacobian(std::span<const double> w) {
  std::vector<double> j(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) j[i] = 2.0 * w[i] * (1.0 - w[i]);
  return j;
}

}  // namespace uap

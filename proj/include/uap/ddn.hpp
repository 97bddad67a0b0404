#pragma once

#include <span>
#include <vector>

#include "uap/model.hpp"
#include "uap/perturbation.hpp"

namespace uap {

/// Decoupled direction-and-norm attack settings.
struct InnerAttackConfig {
  int steps = 50;
  double init_norm = 0.2;
  double gamma = 0.05;       // relative radius change per step
  double alpha_start = 1.0;  // cosine-annealed gradient step size
  double alpha_end = 0.01;
};

struct DdnResult {
  std::vector<double> delta;
  bool success = false;
  double l2_norm = 0.0;
  /// radii[0] is the initial radius, radii[k] the radius used for iterate k.
  std::vector<double> radii;
  /// adversarial[k-1] tells whether iterate k-1 met the goal (decides radii[k]).
  std::vector<bool> adversarial;
};

void validate(const InnerAttackConfig& cfg);

/// Minimal-norm l2 perturbation r such that clip(x + r) satisfies `goal`
/// relative to `reference_label` (the clean prediction for untargeted attacks).
/// On success `delta` is the smallest adversarial iterate found; otherwise it is
/// the last iterate. x + delta always lies in [0,1]^d.
DdnResult ddn_minimal_perturbation(const VictimModel& model, std::span<const double> x, const AttackGoal& goal,
                                   int reference_label, const InnerAttackConfig& cfg = {});

}  // namespace uap

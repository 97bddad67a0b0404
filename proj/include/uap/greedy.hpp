#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "uap/audio.hpp"
#include "uap/ddn.hpp"
#include "uap/model.hpp"
#include "uap/perturbation.hpp"

namespace uap {

/// Euclidean projection onto the p-ball of radius xi (p = 2 or infinity).
std::vector<double> project_lp(std::span<const double> v, NormOrder p, double xi);

struct GreedyConfig {
  NormOrder p = NormOrder::linf;
  double xi = 0.2;
  double delta = 0.1;
  AttackGoal goal;
  int max_epochs = 100;
  InnerAttackConfig inner;
  std::uint64_t seed = 0;

  /// Radius 0.2 untargeted, 0.12 targeted, l-infinity.
  static GreedyConfig defaults(const AttackGoal& goal);
};

struct GreedyResult {
  Perturbation perturbation;
  std::vector<double> asr_trace;  // training ASR after each epoch (entry 0: before any epoch)
  bool converged = false;
  int inner_calls = 0;
  int epochs = 0;
};

/// Iterative greedy universal perturbation: visit samples in a seeded order,
/// skip those already fooled, add the DDN minimal perturbation for the rest
/// and project back onto the ball, until training ASR >= 1 - delta.
GreedyResult greedy_uap(const VictimModel& model, const std::vector<AudioSample>& X, const GreedyConfig& cfg);

}  // namespace uap

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "uap/adam.hpp"
#include "uap/audio.hpp"
#include "uap/model.hpp"
#include "uap/perturbation.hpp"
#include "uap/tanh_space.hpp"

namespace uap {

/// max(max_{j != t} f_j - f_t, -kappa). When `dlogits` is non-empty it
/// receives a subgradient (zero on the flat branch).
double hinge_targeted(std::span<const double> logits, int target, double kappa, std::span<double> dlogits = {});

/// max(f_y - max_{j != y} f_j, -kappa) for the legitimate class y.
double hinge_untargeted(std::span<const double> logits, int legit, double kappa, std::span<double> dlogits = {});

/// Penalty objective for one perturbed sample w:
///   L = SPL(ln(w / (1 - w)) / 2 - x') + c * G(f(w)).
/// `label` is the target for targeted goals and the legitimate class otherwise.
struct PenaltyLoss {
  double value = 0.0;
  double spl_term = 0.0;
  double hinge = 0.0;
  std::vector<double> grad_w;  // dL/dw, empty unless requested
};

PenaltyLoss penalty_loss(const VictimModel& model, std::span<const double> w, const TanhVector& x_tanh, int label,
                         double c, double kappa, AttackMode mode, bool with_gradient = false);

/// Gradient of SPL(v) with respect to v; zero where the RMS is at the floor.
std::vector<double> spl_gradient(std::span<const double> v);

struct PenaltyConfig {
  double c = 0.2;
  double kappa = 40.0;
  double delta = 0.1;
  int batch_size = 100;
  int max_iterations = 100;
  AttackGoal goal;
  std::optional<Projection> projection;
  AdamConfig adam{.learning_rate = 0.01};
  double epsilon = kTanhEpsilon;
  std::uint64_t seed = 0;

  /// c = 0.2, kappa = 40 untargeted; c = 0.15, kappa = 10 targeted.
  static PenaltyConfig defaults(const AttackGoal& goal);
};

/// One optimisation step. Losses are evaluated at the iterate before the
/// Adam update; `asr` is measured after it.
struct PenaltyIteration {
  int iteration = 0;
  double asr = 0.0;
  double spl_vprime = 0.0;      // SPL of the tanh-space perturbation (the optimised term)
  double spl_signal = 0.0;      // SPL of its signal-space rendering
  double mean_loss = 0.0;
  double min_loss_minus_spl = 0.0;  // min over the batch of L_i - SPL(v')
  double max_iterate_drift = 0.0;   // max |recover_vprime(w_i, x'_i) - v'|
  double w_min = 0.0;
  double w_max = 0.0;
};

struct PenaltyResult {
  Perturbation perturbation;
  std::vector<PenaltyIteration> trace;
  double initial_asr = 0.0;
  double final_asr = 0.0;
  bool converged = false;
};

/// Penalty-method universal perturbation: Adam on v' over seeded mini-batches
/// until the training ASR reaches 1 - delta or the iteration cap.
/// `labels` are the legitimate classes of X (used by the untargeted hinge).
PenaltyResult penalty_uap(const VictimModel& model, const std::vector<AudioSample>& X, const std::vector<int>& labels,
                          const PenaltyConfig& cfg);

}  // namespace uap

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uap/audio.hpp"
#include "uap/model.hpp"
#include "uap/tanh_space.hpp"

namespace uap {

enum class AttackMode { untargeted, targeted };
enum class Method { greedy, penalty };

/// What counts as a successful attack on one sample.
struct AttackGoal {
  AttackMode mode = AttackMode::untargeted;
  int target = -1;  // only meaningful for targeted attacks

  static AttackGoal untargeted() { return {}; }
  static AttackGoal targeted(int t) { return {AttackMode::targeted, t}; }

  /// Untargeted: prediction differs from the clean one. Targeted: prediction == target.
  bool satisfied(int perturbed_prediction, int clean_prediction) const {
    return mode == AttackMode::targeted ? perturbed_prediction == target
                                        : perturbed_prediction != clean_prediction;
  }
};

/// Norm order of the projection ball; only 2 and infinity are supported.
enum class NormOrder { l2, linf };

struct Projection {
  NormOrder p = NormOrder::l2;
  double xi = 6.0;
};

std::string to_string(AttackMode mode);
std::string to_string(Method method);
std::string to_string(NormOrder p);
AttackMode parse_mode(const std::string& s);
Method parse_method(const std::string& s);
NormOrder parse_norm(const std::string& s);

/// A universal perturbation. Greedy results live in signal space and are
/// added (then clipped); penalty results carry the tanh-space vector v' and
/// are applied through the tanh reparameterisation.
struct Perturbation {
  Method method = Method::greedy;
  AttackGoal goal;
  std::vector<double> v_signal;
  std::optional<std::vector<double>> v_tanh;
  double epsilon = kTanhEpsilon;
  std::uint64_t seed = 0;
  // Greedy ball constraint.
  std::optional<Projection> ball;
  // Penalty hyperparameters (recorded in the manifest).
  std::optional<double> c;
  std::optional<double> kappa;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;

  std::size_t dim() const { return v_signal.size(); }
  double l2() const;
  double linf() const;
  double spl_signal() const;
};

/// Perturbed input for a clean sample x.
std::vector<double> apply_perturbation(const Perturbation& pert, std::span<const double> x);

/// Signal-space difference between the perturbed and clean input.
std::vector<double> applied_difference(const Perturbation& pert, std::span<const double> x);

/// clip(x + v, 0, 1).
std::vector<double> add_clipped(std::span<const double> x, std::span<const double> v);

/// Manifest JSON at `path` plus a little-endian f32 blob at `path` + ".bin"
/// holding v_signal followed by v_tanh when present.
void save_perturbation(const Perturbation& pert, const std::filesystem::path& path);
Perturbation load_perturbation(const std::filesystem::path& path);

/// Attack success rate of a perturbation over X; predictions on the clean
/// samples define the untargeted reference.
double asr(const VictimModel& model, const std::vector<AudioSample>& X, const Perturbation& pert);

/// ASR of an additive signal-space v (inputs clipped to [0,1] before prediction).
double asr(const VictimModel& model, const std::vector<AudioSample>& X, std::span<const double> v,
           const AttackGoal& goal);

std::vector<int> clean_predictions(const VictimModel& model, const std::vector<AudioSample>& X);

}  // namespace uap

#include "uap/ddn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uap/audio.hpp"
#include "uap/errors.hpp"

namespace uap {

void validate(const InnerAttackConfig& cfg) {
  if (cfg.steps < 1) throw InvalidInput("DDN needs at least one step");
  if (!(cfg.init_norm > 0.0)) throw InvalidInput("DDN initial norm must be positive");
  if (!(cfg.gamma > 0.0 && cfg.gamma < 1.0)) throw InvalidInput("DDN gamma must lie in (0,1)");
}

DdnResult ddn_minimal_perturbation(const VictimModel& model, std::span<const double> x, const AttackGoal& goal,
                                   int reference_label, const InnerAttackConfig& cfg) {
  validate(cfg);
  const std::size_t d = x.size();
  if (static_cast<int>(d) != model.input_dim()) throw InvalidInput("DDN: input dimension mismatch");
  const bool targeted = goal.mode == AttackMode::targeted;
  // Untargeted ascends the cross-entropy of the reference label, targeted
  // descends the cross-entropy of the target.
  const ScalarHead head = cross_entropy_head(targeted ? goal.target : reference_label);
  const double direction = targeted ? -1.0 : 1.0;

  DdnResult res;
  res.radii.push_back(cfg.init_norm);
  std::vector<double> delta(d, 0.0);
  std::vector<double> x_adv(x.begin(), x.end());
  double radius = cfg.init_norm;
  double best_norm = std::numeric_limits<double>::infinity();
  std::vector<double> best;

  for (int k = 1; k <= cfg.steps; ++k) {
    const ForwardTrace tr = model.trace(x_adv);
    const bool is_adv = goal.satisfied(argmax(tr.logits()), reference_label);
    if (is_adv && k > 1) {
      const double n = l2_norm(delta);
      if (n < best_norm) {
        best_norm = n;
        best = delta;
      }
    }

    std::vector<double> dlogits(tr.logits().size());
    head(tr.logits(), dlogits);
    std::vector<double> g = model.backward(tr, dlogits);
    const double gnorm = l2_norm(g);
    const double alpha = cfg.alpha_end + (cfg.alpha_start - cfg.alpha_end) * 0.5 *
                                             (1.0 + std::cos(std::numbers::pi * (k - 1) / cfg.steps));
    if (gnorm > 0.0) {
      for (std::size_t i = 0; i < d; ++i) delta[i] += direction * alpha * g[i] / gnorm;
    }

    radius *= is_adv ? (1.0 - cfg.gamma) : (1.0 + cfg.gamma);
    res.adversarial.push_back(is_adv);
    res.radii.push_back(radius);

    const double dnorm = l2_norm(delta);
    for (std::size_t i = 0; i < d; ++i) {
      const double step = dnorm > 0.0 ? radius * delta[i] / dnorm : 0.0;
      x_adv[i] = std::clamp(x[i] + step, 0.0, 1.0);
      delta[i] = x_adv[i] - x[i];
    }
  }

  // The final iterate has not been checked yet.
  if (goal.satisfied(predict(model, x_adv), reference_label)) {
    const double n = l2_norm(delta);
    if (n < best_norm) {
      best_norm = n;
      best = delta;
    }
  }

  res.success = !best.empty();
  res.delta = res.success ? std::move(best) : std::move(delta);
  res.l2_norm = l2_norm(res.delta);
  return res;
}

}  // namespace uap

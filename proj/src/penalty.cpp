#include "uap/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "uap/errors.hpp"
#include "uap/greedy.hpp"

namespace uap {

namespace {

// Largest logit other than `excluded`; lowest index wins ties.
int best_other(std::span<const double> logits, int excluded) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(logits.size()); ++j) {
    if (j == excluded) continue;
    if (best < 0 || logits[j] > logits[best]) best = j;
  }
  return best;
}

void check_class(std::span<const double> logits, int cls) {
  if (logits.size() < 2) throw InvalidInput("hinge needs at least two classes");
  if (cls < 0 || cls >= static_cast<int>(logits.size())) throw InvalidInput("hinge class index out of range");
}

}  // namespace

double hinge_targeted(std::span<const double> logits, int target, double kappa, std::span<double> dlogits) {
  check_class(logits, target);
  const int other = best_other(logits, target);
  const double margin = logits[other] - logits[target];
  if (!dlogits.empty()) {
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    if (margin > -kappa) {
      dlogits[other] = 1.0;
      dlogits[target] = -1.0;
    }
  }
  return std::max(margin, -kappa);
}

double hinge_untargeted(std::span<const double> logits, int legit, double kappa, std::span<double> dlogits) {
  check_class(logits, legit);
  const int other = best_other(logits, legit);
  const double margin = logits[legit] - logits[other];
  if (!dlogits.empty()) {
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
    if (margin > -kappa) {
      dlogits[legit] = 1.0;
      dlogits[other] = -1.0;
    }
  }
  return std::max(margin, -kappa);
}

std::vector<double> spl_gradient(std::span<const double> v) {
  std::vector<double> g(v.size(), 0.0);
  const double p = rms_power(v);
  if (p <= kPowerFloor) return g;
  const double scale = 20.0 / std::numbers::ln10 / (static_cast<double>(v.size()) * p * p);
  for (std::size_t i = 0; i < v.size(); ++i) g[i] = scale * v[i];
  return g;
}

PenaltyLoss penalty_loss(const VictimModel& model, std::span<const double> w, const TanhVector& x_tanh, int label,
                         double c, double kappa, AttackMode mode, bool with_gradient) {
  const TanhVector vprime = recover_vprime(w, x_tanh);
  PenaltyLoss out;
  out.spl_term = spl(vprime.values);

  const ForwardTrace tr = model.trace(w);
  std::vector<double> dlogits(with_gradient ? tr.logits().size() : 0);
  out.hinge = mode == AttackMode::targeted ? hinge_targeted(tr.logits(), label, kappa, dlogits)
                                           : hinge_untargeted(tr.logits(), label, kappa, dlogits);
  out.value = out.spl_term + c * out.hinge;
  if (!with_gradient) return out;

  // d/dw of the SPL term goes through dv'/dw = 1 / (2 w (1 - w)).
  std::vector<double> g = spl_gradient(vprime.values);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] /= 2.0 * w[i] * (1.0 - w[i]);
  if (std::any_of(dlogits.begin(), dlogits.end(), [](double x) { return x != 0.0; })) {
    const std::vector<double> gh = model.backward(tr, dlogits);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += c * gh[i];
  }
  out.grad_w = std::move(g);
  return out;
}

PenaltyConfig PenaltyConfig::defaults(const AttackGoal& goal) {
  PenaltyConfig cfg;
  cfg.goal = goal;
  if (goal.mode == AttackMode::targeted) {
    cfg.c = 0.15;
    cfg.kappa = 10.0;
  }
  return cfg;
}

namespace {

double tanh_asr(const VictimModel& model, const std::vector<TanhVector>& x_tanh, const std::vector<int>& clean,
                std::span<const double> vprime, const AttackGoal& goal) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < x_tanh.size(); ++i) {
    hits += goal.satisfied(predict(model, perturbed_sample(x_tanh[i], vprime)), clean[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(x_tanh.size());
}

void validate(const PenaltyConfig& cfg, const VictimModel& model) {
  if (!(cfg.c > 0.0)) throw InvalidInput("penalty: c must be positive");
  if (!(cfg.kappa >= 0.0)) throw InvalidInput("penalty: kappa must be non-negative");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw InvalidInput("penalty: delta must lie in (0,1]");
  if (cfg.batch_size < 1) throw InvalidInput("penalty: batch size must be at least 1");
  if (cfg.max_iterations < 0) throw InvalidInput("penalty: negative iteration cap");
  if (cfg.goal.mode == AttackMode::targeted &&
      (cfg.goal.target < 0 || cfg.goal.target >= model.num_classes())) {
    throw InvalidInput("penalty: target class out of range");
  }
  if (cfg.projection && !(cfg.projection->xi > 0.0)) throw InvalidInput("penalty: projection radius must be positive");
}

// Projects the signal-space rendering (centred on its v' = 0 midpoint of 1/2)
// onto the ball and maps the result back to tanh space.
void project_vprime(std::vector<double>& vprime, const Projection& proj, double eps) {
  std::vector<double> centred = render_signal_v(vprime, eps);
  for (double& e : centred) e -= 0.5;
  const std::vector<double> projected = project_lp(centred, proj.p, proj.xi);
  for (std::size_t i = 0; i < vprime.size(); ++i) {
    const double z = 2.0 * projected[i] * (1.0 - eps);
    vprime[i] = 0.5 * std::log((1.0 + z) / (1.0 - z));
  }
}

}  // namespace

PenaltyResult penalty_uap(const VictimModel& model, const std::vector<AudioSample>& X, const std::vector<int>& labels,
                          const PenaltyConfig& cfg) {
  if (X.empty()) throw InvalidInput("penalty_uap: empty sample set");
  validate(cfg, model);
  const bool targeted = cfg.goal.mode == AttackMode::targeted;
  if (!targeted && labels.size() != X.size()) throw InvalidInput("penalty_uap: labels not aligned with samples");
  const std::size_t d = static_cast<std::size_t>(model.input_dim());

  std::vector<TanhVector> x_tanh;
  x_tanh.reserve(X.size());
  for (const AudioSample& s : X) {
    validate_sample(s);
    if (s.size() != d) throw InvalidInput("penalty_uap: sample dimension mismatch");
    x_tanh.push_back(to_tanh_space(s.samples, cfg.epsilon));
  }
  const std::vector<int> clean = clean_predictions(model, X);

  std::vector<double> vprime(d, 0.0);
  AdamState adam(d, cfg.adam);
  PenaltyResult res;
  double current = tanh_asr(model, x_tanh, clean, vprime, cfg.goal);
  res.initial_asr = current;
  std::vector<double> best = vprime;
  double best_asr = current;

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), X.size());

  int iteration = 0;
  while (current < 1.0 - cfg.delta && iteration < cfg.max_iterations) {
    PenaltyIteration it;
    it.iteration = iteration + 1;
    it.spl_vprime = spl(vprime);
    it.spl_signal = spl(render_signal_v(vprime, cfg.epsilon));
    it.min_loss_minus_spl = std::numeric_limits<double>::infinity();
    it.w_min = 1.0;
    it.w_max = 0.0;

    std::vector<double> g(d, 0.0);
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      const std::size_t i = order[cursor++];
      const std::vector<double> w = perturbed_sample(x_tanh[i], vprime);
      const TanhVector recovered = recover_vprime(w, x_tanh[i]);
      for (std::size_t j = 0; j < d; ++j) {
        it.max_iterate_drift = std::max(it.max_iterate_drift, std::abs(recovered.values[j] - vprime[j]));
      }
      it.w_min = std::min(it.w_min, *std::min_element(w.begin(), w.end()));
      it.w_max = std::max(it.w_max, *std::max_element(w.begin(), w.end()));

      const int label = targeted ? cfg.goal.target : labels[i];
      const PenaltyLoss loss = penalty_loss(model, w, x_tanh[i], label, cfg.c, cfg.kappa, cfg.goal.mode, true);
      loss_sum += loss.value;
      it.min_loss_minus_spl = std::min(it.min_loss_minus_spl, loss.value - it.spl_vprime);
      // Chain dL/dw into dL/dv' with dw/dv' = 2 w (1 - w); the batch sum is not averaged.
      for (std::size_t j = 0; j < d; ++j) g[j] += loss.grad_w[j] * 2.0 * w[j] * (1.0 - w[j]);
    }
    it.mean_loss = loss_sum / static_cast<double>(batch);

    const std::vector<double> step = adam_update(adam, g);
    for (std::size_t j = 0; j < d; ++j) vprime[j] += step[j];
    if (cfg.projection) project_vprime(vprime, *cfg.projection, cfg.epsilon);

    current = tanh_asr(model, x_tanh, clean, vprime, cfg.goal);
    it.asr = current;
    res.trace.push_back(it);
    ++iteration;
    if (current > best_asr) {
      best_asr = current;
      best = vprime;
    }
  }

  res.converged = current >= 1.0 - cfg.delta;
  if (!res.converged) vprime = best;
  res.final_asr = res.converged ? current : best_asr;

  Perturbation& p = res.perturbation;
  p.method = Method::penalty;
  p.goal = cfg.goal;
  p.v_signal = render_signal_v(vprime, cfg.epsilon);
  p.v_tanh = std::move(vprime);
  p.epsilon = cfg.epsilon;
  p.seed = cfg.seed;
  p.ball = cfg.projection;
  p.c = cfg.c;
  p.kappa = cfg.kappa;
  p.batch_size = cfg.batch_size;
  p.learning_rate = cfg.adam.learning_rate;
  return res;
}

}  // namespace uap

#include "uap/greedy.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "uap/errors.hpp"

namespace uap {

std::vector<double> project_lp(std::span<const double> v, NormOrder p, double xi) {
  if (!(xi > 0.0)) throw InvalidInput("projection radius must be positive");
  std::vector<double> out(v.begin(), v.end());
  if (p == NormOrder::linf) {
    for (double& e : out) e = std::clamp(e, -xi, xi);
  } else {
    const double n = l2_norm(out);
    if (n > xi) {
      const double s = xi / n;
      for (double& e : out) e *= s;
    }
  }
  return out;
}

GreedyConfig GreedyConfig::defaults(const AttackGoal& goal) {
  GreedyConfig cfg;
  cfg.goal = goal;
  cfg.xi = goal.mode == AttackMode::targeted ? 0.12 : 0.2;
  return cfg;
}

namespace {

double additive_asr(const VictimModel& model, const std::vector<AudioSample>& X, const std::vector<int>& clean,
                    std::span<const double> v, const AttackGoal& goal) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    hits += goal.satisfied(predict(model, add_clipped(X[i].samples, v)), clean[i]) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(X.size());
}

}  // namespace

GreedyResult greedy_uap(const VictimModel& model, const std::vector<AudioSample>& X, const GreedyConfig& cfg) {
  if (X.empty()) throw InvalidInput("greedy_uap: empty sample set");
  if (!(cfg.xi > 0.0)) throw InvalidInput("greedy_uap: xi must be positive");
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw InvalidInput("greedy_uap: delta must lie in (0,1]");
  if (cfg.goal.mode == AttackMode::targeted &&
      (cfg.goal.target < 0 || cfg.goal.target >= model.num_classes())) {
    throw InvalidInput("greedy_uap: target class out of range");
  }
  validate(cfg.inner);
  const std::size_t d = static_cast<std::size_t>(model.input_dim());
  for (const AudioSample& s : X) {
    validate_sample(s);
    if (s.size() != d) throw InvalidInput("greedy_uap: sample dimension mismatch");
  }

  const std::vector<int> clean = clean_predictions(model, X);
  std::vector<double> v(d, 0.0);
  GreedyResult res;
  double current = additive_asr(model, X, clean, v, cfg.goal);
  res.asr_trace.push_back(current);
  std::vector<double> best_v = v;
  double best_asr = current;

  std::vector<std::size_t> order(X.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  while (current < 1.0 - cfg.delta && res.epochs < cfg.max_epochs) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      const std::vector<double> base = add_clipped(X[i].samples, v);
      if (cfg.goal.satisfied(predict(model, base), clean[i])) continue;
      ++res.inner_calls;
      const DdnResult step = ddn_minimal_perturbation(model, base, cfg.goal, clean[i], cfg.inner);
      if (!step.success) continue;
      for (std::size_t j = 0; j < d; ++j) v[j] += step.delta[j];
      v = project_lp(v, cfg.p, cfg.xi);
    }
    ++res.epochs;
    current = additive_asr(model, X, clean, v, cfg.goal);
    res.asr_trace.push_back(current);
    if (current > best_asr) {
      best_asr = current;
      best_v = v;
    }
  }

  res.converged = current >= 1.0 - cfg.delta;
  Perturbation& p = res.perturbation;
  p.method = Method::greedy;
  p.goal = cfg.goal;
  p.v_signal = res.converged ? v : best_v;
  p.seed = cfg.seed;
  p.ball = Projection{cfg.p, cfg.xi};
  return res;
}

}  // namespace uap

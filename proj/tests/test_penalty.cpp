#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "toy.hpp"
#include "uap/errors.hpp"
#include "uap/penalty.hpp"

using namespace uap;

namespace {

std::vector<double> random_logits(std::mt19937_64& rng, int c) {
  std::normal_distribution<double> n(0.0, 3.0);
  std::vector<double> z(c);
  for (auto& e : z) e = n(rng);
  return z;
}

// Small slice of the toy training set: 4 per class, interleaved.
std::vector<AudioSample> toy_slice(std::size_t n) {
  const auto& t = toy::setup();
  return {t.data.train.begin(), t.data.train.begin() + static_cast<long>(n)};
}

}  // namespace

TEST_CASE("hinge examples") {
  CHECK(hinge_targeted(std::vector<double>{1, 3, 2}, 0, 0.0) == 2.0);
  CHECK(hinge_targeted(std::vector<double>{5, 1, 1}, 0, 0.0) == 0.0);
  CHECK(hinge_targeted(std::vector<double>{5, 1, 1}, 0, 2.0) == -2.0);
  CHECK(hinge_untargeted(std::vector<double>{3, 1}, 0, 0.0) == 2.0);
  CHECK(hinge_untargeted(std::vector<double>{1, 3}, 0, 0.0) == 0.0);
  CHECK(hinge_untargeted(std::vector<double>{1, 9}, 0, 40.0) == -8.0);
  CHECK_THROWS_AS(hinge_targeted(std::vector<double>{1, 2}, 2, 0.0), InvalidInput);
  CHECK_THROWS_AS(hinge_untargeted(std::vector<double>{1, 2}, -1, 0.0), InvalidInput);
}

TEST_CASE("hinge subgradient") {
  std::vector<double> d(3);
  hinge_targeted(std::vector<double>{1, 3, 2}, 0, 0.0, d);
  CHECK(d == std::vector<double>{-1, 1, 0});
  hinge_targeted(std::vector<double>{5, 1, 1}, 0, 2.0, d);
  CHECK(d == std::vector<double>{0, 0, 0});
  hinge_untargeted(std::vector<double>{1, 3, 2}, 2, 10.0, d);
  CHECK(d == std::vector<double>{0, -1, 1});
}

TEST_CASE("kappa = 0 hinge vanishes exactly when the condition holds") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto z = random_logits(rng, 2 + trial % 5);
    const int c = static_cast<int>(z.size());
    const int t = trial % c;
    const double gt = hinge_targeted(z, t, 0.0);
    const double gu = hinge_untargeted(z, t, 0.0);
    CHECK((gt == 0.0) == (argmax(z) == t));
    CHECK((gt > 0.0) == (argmax(z) != t));
    CHECK((gu == 0.0) == (argmax(z) != t));
    CHECK(gt >= 0.0);
    CHECK(gu >= 0.0);
  }
}

// The untargeted hinge subtracts a max, so only the targeted one is convex.
TEST_CASE("targeted hinge is convex in the logits and both scale with them") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto a = random_logits(rng, 4);
    const auto b = random_logits(rng, 4);
    const double lam = u(rng);
    std::vector<double> mix(4);
    for (int j = 0; j < 4; ++j) mix[j] = lam * a[j] + (1 - lam) * b[j];
    for (double kappa : {0.0, 5.0}) {
      CHECK(hinge_targeted(mix, 1, kappa) <=
            lam * hinge_targeted(a, 1, kappa) + (1 - lam) * hinge_targeted(b, 1, kappa) + 1e-12);
    }
    const double alpha = 0.1 + 5.0 * u(rng);
    std::vector<double> scaled(a);
    for (auto& e : scaled) e *= alpha;
    CHECK(argmax(scaled) == argmax(a));
    CHECK(hinge_targeted(scaled, 2, 0.0) == doctest::Approx(alpha * hinge_targeted(a, 2, 0.0)).epsilon(1e-12));
    CHECK(hinge_untargeted(scaled, 2, 0.0) == doctest::Approx(alpha * hinge_untargeted(a, 2, 0.0)).epsilon(1e-12));
  }
}

TEST_CASE("penalty loss at v' = 0 and on satisfied samples") {
  const auto& t = toy::setup();
  const auto& x = t.data.train[0].samples;
  const TanhVector xt = to_tanh_space(x);
  const auto w = perturbed_sample(xt, std::vector<double>(x.size(), 0.0));
  const auto z = forward_logits(t.model, w);
  const int label = *t.data.train[0].label;
  const auto L = penalty_loss(t.model, w, xt, label, 0.2, 40.0, AttackMode::untargeted);
  CHECK(L.spl_term == doctest::Approx(-240.0).epsilon(1e-12));
  CHECK(L.value == doctest::Approx(-240.0 + 0.2 * hinge_untargeted(z, label, 40.0)).epsilon(1e-12));
  // Targeting the predicted class at kappa = 0: the hinge term is exactly zero.
  const auto S = penalty_loss(t.model, w, xt, argmax(z), 0.2, 0.0, AttackMode::targeted);
  CHECK(S.hinge == 0.0);
  CHECK(S.value == S.spl_term);

  std::vector<double> bad(w);
  bad[3] = 1.0;
  CHECK_THROWS_AS(penalty_loss(t.model, bad, xt, label, 0.2, 40.0, AttackMode::untargeted), SingularityError);
}

TEST_CASE("penalty loss gradient matches central differences") {
  // Step 1e-4, 100 coordinates, stencils that cross a ReLU / max-pool / hinge
  // branch change are redrawn.
  const auto& t = toy::setup();
  std::mt19937_64 rng(33);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int trial = 0; trial < 3; ++trial) {
    const auto& s = t.data.train[static_cast<std::size_t>(trial * 7)];
    const TanhVector xt = to_tanh_space(s.samples);
    std::vector<double> vp(s.size());
    for (auto& e : vp) e = n(rng);
    const auto w = perturbed_sample(xt, vp);
    const bool targeted = trial % 2 == 1;
    const AttackMode mode = targeted ? AttackMode::targeted : AttackMode::untargeted;
    const int label = targeted ? (*s.label + 1) % 3 : *s.label;
    const double c = 1.5, kappa = 40.0;
    const auto L = penalty_loss(t.model, w, xt, label, c, kappa, mode, true);
    auto f = [&](std::span<const double> ww) { return penalty_loss(t.model, ww, xt, label, c, kappa, mode).value; };
    auto pattern = [&](std::span<const double> ww) {
      return oracle::penalty_pattern(t.model, ww, label, kappa, targeted);
    };
    const auto r = oracle::fd_check(f, L.grad_w, w, 1e-4, 100, rng, pattern);
    CHECK(r.used == 100);
    CHECK(r.rel_error < 1e-3);
  }
}

TEST_CASE("spl gradient matches differences and vanishes at the floor") {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> n(0.0, 0.1);
  std::vector<double> v(64);
  for (auto& e : v) e = n(rng);
  const auto g = spl_gradient(v);
  const auto r = oracle::fd_check([](std::span<const double> x) { return spl(x); }, g, v, 1e-6, 64, rng, nullptr);
  CHECK(r.rel_error < 1e-6);
  for (double e : spl_gradient(std::vector<double>(64, 0.0))) CHECK(e == 0.0);
}

TEST_CASE("penalty_uap with delta = 1 returns v' = 0") {
  const auto X = toy_slice(6);
  const auto& t = toy::setup();
  PenaltyConfig cfg = PenaltyConfig::defaults(AttackGoal::untargeted());
  cfg.delta = 1.0;
  const auto r = penalty_uap(t.model, X, labels_of(X), cfg);
  CHECK(r.converged);
  CHECK(r.trace.empty());
  REQUIRE(r.perturbation.v_tanh.has_value());
  for (double e : *r.perturbation.v_tanh) CHECK(e == 0.0);
  for (double e : r.perturbation.v_signal) CHECK(e == doctest::Approx(0.5).epsilon(1e-7));
}

TEST_CASE("penalty trace invariants: weak ordering, iterate consistency, box safety") {
  const auto X = toy_slice(12);
  const auto& t = toy::setup();
  const auto hash = t.model.parameter_hash();
  PenaltyConfig cfg = PenaltyConfig::defaults(AttackGoal::targeted(2));
  cfg.kappa = 0.0;
  cfg.c = 40.0;
  cfg.batch_size = 5;
  cfg.max_iterations = 25;
  cfg.delta = 0.01;
  const auto r = penalty_uap(t.model, X, labels_of(X), cfg);
  REQUIRE_FALSE(r.trace.empty());
  for (const auto& it : r.trace) {
    CHECK(it.min_loss_minus_spl >= -1e-9 * std::abs(it.spl_vprime));
    CHECK(it.max_iterate_drift <= 1e-6);
    CHECK(it.w_min > 0.0);
    CHECK(it.w_max < 1.0);
    CHECK(it.asr >= 0.0);
    CHECK(it.asr <= 1.0);
  }
  if (r.converged) CHECK(r.final_asr >= 1.0 - cfg.delta);
  CHECK(t.model.parameter_hash() == hash);

  const auto again = penalty_uap(t.model, X, labels_of(X), cfg);
  CHECK(*again.perturbation.v_tanh == *r.perturbation.v_tanh);
}

TEST_CASE("single-sample penalty attack fools its sample") {
  // c = 0.2 never leaves v' = 0 on the toy victim; the same x250 scaling as
  // the universal desk-scale runs is used.
  const auto& t = toy::setup();
  const std::vector<AudioSample> X{t.data.train[4]};
  PenaltyConfig cfg = PenaltyConfig::defaults(AttackGoal::untargeted());
  cfg.c = 0.2 * 250;
  cfg.kappa = 90.0;
  cfg.batch_size = 1;
  cfg.max_iterations = 19;
  const auto r = penalty_uap(t.model, X, labels_of(X), cfg);
  CHECK(r.converged);
  CHECK(asr(t.model, X, r.perturbation) == 1.0);
}

TEST_CASE("optional l2 projection bounds the rendered perturbation") {
  const auto X = toy_slice(6);
  const auto& t = toy::setup();
  PenaltyConfig cfg = PenaltyConfig::defaults(AttackGoal::targeted(0));
  cfg.c = 40.0;
  cfg.max_iterations = 10;
  cfg.projection = Projection{NormOrder::l2, 0.5};
  const auto r = penalty_uap(t.model, X, labels_of(X), cfg);
  std::vector<double> centred(r.perturbation.v_signal);
  for (auto& e : centred) e -= 0.5;
  CHECK(l2_norm(centred) <= 0.5 + 1e-6);
}

TEST_CASE("penalty config validation") {
  const auto X = toy_slice(3);
  const auto& t = toy::setup();
  PenaltyConfig cfg = PenaltyConfig::defaults(AttackGoal::untargeted());
  CHECK(cfg.c == 0.2);
  CHECK(cfg.kappa == 40.0);
  CHECK(PenaltyConfig::defaults(AttackGoal::targeted(1)).c == 0.15);
  CHECK(PenaltyConfig::defaults(AttackGoal::targeted(1)).kappa == 10.0);
  cfg.c = 0.0;
  CHECK_THROWS_AS(penalty_uap(t.model, X, labels_of(X), cfg), InvalidInput);
  cfg = PenaltyConfig::defaults(AttackGoal::untargeted());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(penalty_uap(t.model, X, labels_of(X), cfg), InvalidInput);
  cfg = PenaltyConfig::defaults(AttackGoal::untargeted());
  CHECK_THROWS_AS(penalty_uap(t.model, {}, {}, cfg), InvalidInput);
}

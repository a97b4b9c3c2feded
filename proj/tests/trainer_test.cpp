#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pbcert/synth_digits.hpp"
#include "pbcert/trainer.hpp"

using namespace pbcert;

namespace {

struct Toy {
  Architecture arch{{2, 4, 3}};
  GaussianPosterior post = GaussianPosterior::init_prior(arch, 0.3, 11);
  std::vector<double> inputs{0.9, -0.4, -0.7, 0.8, 0.2, 0.5, 1.1, 0.3, -0.6, -0.9};
  std::vector<std::uint8_t> labels{0, 1, 2, 1, 0};
  std::vector<double> noise = draw_noise(arch, 123);
  TrainConfig config;

  explicit Toy(bool perturb = true) {
    config.arch = {2, 4, 3};
    config.n_train = 40;
    config.slope_window = 10;
    if (!perturb) return;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (double& m : post.mu()) m += 0.4 * n(rng);
    for (double& r : post.rho()) r += 0.3 * n(rng);
  }
  BatchView batch() const { return {inputs, labels}; }

  double loss(const GaussianPosterior& p) const {
    const auto w = sample_weights(p, noise);
    const auto logits = forward(arch, w, inputs, labels.size(), Exec::serial);
    double total = 0.0;
    for (std::size_t b = 0; b < labels.size(); ++b) {
      total += bounded_xe(std::span<const double>(logits.data() + 3 * b, 3), labels[b], config.p_min);
    }
    return total / static_cast<double>(labels.size());
  }
  double K(const GaussianPosterior& p) const {
    return (gaussian_kl(p) + std::log(2.0 * std::sqrt(double(config.n_train)) / config.delta)) /
           double(config.n_train);
  }
};

// Central differences of `objective(post)` in every mu and rho coordinate.
ParamGradient fd_gradient(const GaussianPosterior& post,
                          const std::function<double(const GaussianPosterior&)>& objective,
                          double h) {
  const std::size_t P = post.mu().size();
  ParamGradient g{std::vector<double>(P), std::vector<double>(P)};
  for (std::size_t k = 0; k < P; ++k) {
    GaussianPosterior p = post;
    g.mu[k] = oracle::central_diff([&](double x) { p.mu()[k] = x; return objective(p); },
                                   post.mu()[k], h);
    p = post;
    g.rho[k] = oracle::central_diff([&](double x) { p.rho()[k] = x; return objective(p); },
                                    post.rho()[k], h);
  }
  return g;
}

double max_rel_err(const ParamGradient& a, const ParamGradient& b, double floor) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.mu.size(); ++k) {
    worst = std::max(worst, oracle::rel_err(a.mu[k], b.mu[k], floor));
    worst = std::max(worst, oracle::rel_err(a.rho[k], b.rho[k], floor));
  }
  return worst;
}

Dataset digits(std::size_t count, std::uint64_t seed) {
  const SynthDigits d = make_synth_digits(count, seed);
  Dataset data;
  data.rows = d.count;
  data.dim = 784;
  data.labels = d.labels;
  data.pixels.resize(d.pixels.size());
  for (std::size_t i = 0; i < d.pixels.size(); ++i) data.pixels[i] = d.pixels[i] / 255.0;
  return data;
}

}  // namespace

TEST(ObjectiveDirection, PbqMatchesFiniteDifferences) {
  Toy toy;
  toy.config.objective = ObjectiveKind::f_pbq;
  StepState state;
  const auto dir = objective_direction(toy.post, toy.batch(), toy.config, state, toy.noise);
  const auto fd = fd_gradient(
      toy.post,
      [&](const GaussianPosterior& p) { return relaxed_bound(BoundKind::PBQ, toy.loss(p), toy.K(p)); },
      1e-6);
  EXPECT_LT(max_rel_err(dir.grad, fd, 1e-8), 1e-4);
}

TEST(ObjectiveDirection, RtsMatchesFiniteDifferences) {
  Toy toy;
  toy.config.objective = ObjectiveKind::f_rts;
  StepState state;
  const auto dir = objective_direction(toy.post, toy.batch(), toy.config, state, toy.noise);
  const auto fd = fd_gradient(
      toy.post,
      [&](const GaussianPosterior& p) { return relaxed_bound(BoundKind::RTS, toy.loss(p), toy.K(p)); },
      1e-6);
  EXPECT_LT(max_rel_err(dir.grad, fd, 1e-8), 1e-4);
}

TEST(ObjectiveDirection, MaurerMatchesFiniteDifferencesOfInverse) {
  Toy toy;
  toy.config.objective = ObjectiveKind::f_mb;
  StepState state;
  const auto dir = objective_direction(toy.post, toy.batch(), toy.config, state, toy.noise);
  EXPECT_FALSE(dir.degenerate);
  const auto fd = fd_gradient(
      toy.post, [&](const GaussianPosterior& p) { return kl_inverse(toy.loss(p), toy.K(p)); }, 1e-6);
  EXPECT_LT(max_rel_err(dir.grad, fd, 1e-8), 1e-3);
  const GradientSplit expected = implicit_coeffs(dir.p_used, kl_inverse(dir.p_used, dir.K, 1e-10));
  EXPECT_EQ(dir.split.c_L, expected.c_L);
  EXPECT_EQ(dir.split.c_K, expected.c_K);
}

TEST(ObjectiveDirection, AtThePriorOnlyTheLossTermRemains) {
  for (auto kind : {ObjectiveKind::f_pbq, ObjectiveKind::f_rts, ObjectiveKind::f_mb,
                    ObjectiveKind::tf_pbq, ObjectiveKind::tf_rts, ObjectiveKind::tf_mb}) {
    Toy toy(false);
    toy.config.objective = kind;
    StepState state;
    const auto dir = objective_direction(toy.post, toy.batch(), toy.config, state, toy.noise);
    EXPECT_NEAR(dir.kl, 0.0, 1e-12);
    for (std::size_t k = 0; k < dir.grad.mu.size(); ++k) {
      EXPECT_EQ(dir.K_grad.mu[k], 0.0);
      EXPECT_NEAR(dir.K_grad.rho[k], 0.0, 1e-12);
      EXPECT_NEAR(dir.grad.mu[k], dir.split.c_L * dir.loss_grad.mu[k], 1e-12);
      EXPECT_NEAR(dir.grad.rho[k], dir.split.c_L * dir.loss_grad.rho[k], 1e-12);
    }
  }
}

TEST(ObjectiveDirection, EtaScalesOnlyTheKTerm) {
  Toy toy;
  toy.config.objective = ObjectiveKind::f_pbq;
  StepState s1, s2;
  const auto a = objective_direction(toy.post, toy.batch(), toy.config, s1, toy.noise);
  toy.config.eta = 3.0;
  const auto b = objective_direction(toy.post, toy.batch(), toy.config, s2, toy.noise);
  EXPECT_EQ(a.split.c_L, b.split.c_L);
  EXPECT_DOUBLE_EQ(b.split.c_K, 3.0 * a.split.c_K);
}

TEST(ObjectiveDirection, ModulatedPbqIsColinearWithMaurer) {
  Toy toy;
  StepState base;
  base.slope.update(0.3, 0.2);
  TrainConfig mb = toy.config, pbq = toy.config;
  mb.objective = ObjectiveKind::tf_mb;
  pbq.objective = ObjectiveKind::tf_pbq;
  StepState s1 = base, s2 = base, s3 = base;
  const auto target = objective_direction(toy.post, toy.batch(), mb, s1, toy.noise);
  const auto surrogate = objective_direction(toy.post, toy.batch(), pbq, s2, toy.noise);
  pbq.eta = modulation_eta(target.split, surrogate.split);
  const auto modulated = objective_direction(toy.post, toy.batch(), pbq, s3, toy.noise);
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto add = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
  };
  add(target.grad.mu, modulated.grad.mu);
  add(target.grad.rho, modulated.grad.rho);
  EXPECT_NEAR(dot / std::sqrt(na * nb), 1.0, 1e-10);
}

// Seeding the estimator with the batch's own pair reversed makes both rolling
// sums equal, so the slope is exactly 1.
TEST(ObjectiveDirection, TildeReducesToPlainAtUnitSlope) {
  for (auto [tilde, plain] : {std::pair{ObjectiveKind::tf_pbq, ObjectiveKind::f_pbq},
                              std::pair{ObjectiveKind::tf_rts, ObjectiveKind::f_rts},
                              std::pair{ObjectiveKind::tf_mb, ObjectiveKind::f_mb}}) {
    Toy toy;
    toy.config.objective = plain;
    StepState plain_state;
    const auto ref = objective_direction(toy.post, toy.batch(), toy.config, plain_state, toy.noise);
    StepState tilde_state;
    tilde_state.slope.update(ref.p_xe, ref.p_01);
    toy.config.objective = tilde;
    const auto dir = objective_direction(toy.post, toy.batch(), toy.config, tilde_state, toy.noise);
    EXPECT_EQ(dir.slope, 1.0);
    EXPECT_EQ(dir.grad.mu, ref.grad.mu);
    EXPECT_EQ(dir.grad.rho, ref.grad.rho);
  }
}

TEST(ObjectiveDirection, DegenerateSeparationFallsBackToKl) {
  Toy toy;
  toy.config.objective = ObjectiveKind::tf_mb;
  toy.config.eta = 2.0;
  StepState state(10);
  for (int i = 0; i < 9; ++i) state.slope.update(1.0, 1e-12);
  const auto dir = objective_step(toy.post, toy.batch(), toy.config, state, toy.noise);
  EXPECT_TRUE(dir.degenerate);
  EXPECT_EQ(dir.split.c_L, 0.0);
  EXPECT_EQ(dir.split.c_K, 2.0);
  EXPECT_EQ(state.degenerate_steps, 1u);
}

TEST(ObjectiveStep, MomentumUpdate) {
  Toy toy;
  toy.config.objective = ObjectiveKind::f_pbq;
  toy.config.learning_rate = 0.1;
  toy.config.momentum = 0.5;
  StepState state;
  const GaussianPosterior before = toy.post;
  const auto d1 = objective_step(toy.post, toy.batch(), toy.config, state, toy.noise);
  for (std::size_t k = 0; k < d1.grad.mu.size(); ++k) {
    EXPECT_DOUBLE_EQ(toy.post.mu()[k], before.mu()[k] - 0.1 * d1.grad.mu[k]);
  }
  const GaussianPosterior mid = toy.post;
  const auto d2 = objective_step(toy.post, toy.batch(), toy.config, state, toy.noise);
  for (std::size_t k = 0; k < d2.grad.rho.size(); ++k) {
    const double v = 0.5 * d1.grad.rho[k] + d2.grad.rho[k];
    EXPECT_DOUBLE_EQ(toy.post.rho()[k], mid.rho()[k] - 0.1 * v);
  }
  EXPECT_EQ(state.steps, 2u);
}

TEST(McBound, Examples) {
  EXPECT_NEAR(mc_bound_from_mean(0.0, 1000, 0.01), 1.0 - std::exp(-std::log(200.0) / 1000.0), 1e-15);
  EXPECT_NEAR(mc_bound_from_mean(0.163, 150000, 0.01), 0.166, 1e-3);
  EXPECT_NEAR(mc_bound_from_mean(0.3, 1000000000000ull, 0.01), 0.3, 1e-5);
  EXPECT_THROW(mc_bound_from_mean(0.1, 0, 0.01), std::invalid_argument);
  EXPECT_THROW(mc_bound_from_mean(0.1, 100, 1.0), std::invalid_argument);
}

TEST(McEstimate, DeterministicAndRejectsEmpty) {
  const Dataset data = digits(40, 2);
  const auto post = GaussianPosterior::init_prior(Architecture({784, 16, 10}), 0.04, 3);
  const McEstimate a = mc_empirical_risks(post, data, 12, 5, 1e-4);
  const McEstimate b = mc_empirical_risks(post, data, 12, 5, 1e-4, Exec::serial);
  EXPECT_EQ(a.mean_01, b.mean_01);
  EXPECT_EQ(a.mean_xe, b.mean_xe);
  EXPECT_GE(a.mean_01, 0.0);
  EXPECT_LE(a.mean_01, 1.0);
  EXPECT_THROW(mc_empirical_risks(post, Dataset{}, 12, 5, 1e-4), std::invalid_argument);
  const double bound = mc_empirical_bound(post, data, LossKind::ZeroOne, 100, 0.01, 5);
  EXPECT_GE(bound, mc_empirical_risks(post, data, 100, 5, 1e-4).mean_01);
}

TEST(FinalCertificate, ReferenceValues) {
  const Certificate a =
      final_certificate(0.174, 0.065 * 60000, 60000, 0.025, BoundKind::MaurerInverse, LossKind::ZeroOne);
  EXPECT_NEAR(a.bound_value, 0.335, 0.005);
  EXPECT_NEAR(a.kl_over_n, 0.065, 1e-15);
  EXPECT_FALSE(a.vacuous);
  const Certificate b =
      final_certificate(0.301, 0.033 * 60000, 60000, 0.025, BoundKind::MaurerInverse, LossKind::ZeroOne);
  EXPECT_NEAR(b.bound_value, 0.425, 0.005);
}

TEST(FinalCertificate, VacuousAndRelaxedKinds) {
  const Certificate v =
      final_certificate(0.6, 20000.0, 1000, 0.025, BoundKind::MaurerInverse, LossKind::ZeroOne);
  EXPECT_TRUE(v.vacuous);
  EXPECT_EQ(v.bound_value, 1.0);
  const Certificate t = final_certificate(0.6, 500.0, 1000, 0.025, BoundKind::TS, LossKind::BoundedXE);
  EXPECT_TRUE(t.vacuous);
  EXPECT_EQ(t.bound_value, 1.0);
  const Certificate r = final_certificate(0.2, 50.0, 1000, 0.025, BoundKind::RTS, LossKind::BoundedXE, 0.01);
  EXPECT_FALSE(r.vacuous);
  const double K = complexity_term(ComplexityBudget(50.0, 1000, 0.025));
  EXPECT_DOUBLE_EQ(r.bound_value, relaxed_bound(BoundKind::RTS, 0.2, K));
  EXPECT_DOUBLE_EQ(r.delta_total, 0.035);
  EXPECT_GE(r.bound_value, r.emp_risk_bound);
}

TEST(FinalCertificate, CsvHeader) {
  std::ostringstream out;
  write_certificate_header(out);
  EXPECT_EQ(out.str(), "loss,bound,emp_bound,kl_over_n,delta_total,value,vacuous\n");
  std::ostringstream hist;
  write_history_header(hist);
  EXPECT_EQ(hist.str(), "epoch,emp_xe,emp_01,kl_over_n,slope,cert_xe,cert_01\n");
}

TEST(Train, DeterministicAndLearns) {
  const Dataset data = digits(600, 9);
  TrainConfig c;
  c.arch = {784, 32, 10};
  c.objective = ObjectiveKind::tf_mb;
  c.epochs = 4;
  c.batch_size = 50;
  c.learning_rate = 0.01;
  c.n_train = 600;
  c.seed = 3;
  const TrainResult a = train(c, data);
  const TrainResult b = train(c, data);
  ASSERT_EQ(a.history.size(), 4u);
  std::ostringstream ha, hb;
  for (const auto& row : a.history) write_history_row(ha, row);
  for (const auto& row : b.history) write_history_row(hb, row);
  EXPECT_EQ(ha.str(), hb.str());
  EXPECT_TRUE(std::equal(a.posterior.mu().begin(), a.posterior.mu().end(), b.posterior.mu().begin()));
  EXPECT_LT(a.history.back().emp_01, a.history.front().emp_01);
  EXPECT_GT(a.history.back().kl_over_n, 0.0);
  for (const auto& row : a.history) {
    EXPECT_GE(row.cert_01, row.emp_01);
    EXPECT_GT(row.slope, 0.0);
  }
}

TEST(Train, RejectsMismatchedData) {
  const Dataset data = digits(20, 1);
  TrainConfig c;
  c.arch = {784, 8, 10};
  c.n_train = 100;
  EXPECT_THROW(train(c, data), std::invalid_argument);
  c.n_train = 20;
  c.arch = {100, 8, 10};
  EXPECT_THROW(train(c, data), std::invalid_argument);
}

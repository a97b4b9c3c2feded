#pragma once

// SGD training of a Gaussian posterior on a certificate objective, Monte
// Carlo estimation of the posterior's empirical risk, and assembly of the
// final risk certificate.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pbcert/config.hpp"
#include "pbcert/dataset.hpp"
#include "pbcert/grad.hpp"
#include "pbcert/kl.hpp"
#include "pbcert/prob_net.hpp"

namespace pbcert {

// Optimizer and slope-estimator state carried across steps.
struct StepState {
  explicit StepState(std::size_t slope_window = SlopeEstimator::kDefaultWindow)
      : slope(slope_window) {}

  SlopeEstimator slope;
  std::vector<double> velocity_mu;
  std::vector<double> velocity_rho;
  std::size_t steps = 0;
  std::size_t degenerate_steps = 0;
};

struct StepDirection {
  ParamGradient grad;           // c_L * grad(p) + eta * c_K * grad(K)
  GradientSplit split;          // (c_L, eta * c_K) as applied
  ParamGradient loss_grad;      // grad(p) of the batch bounded xe
  ParamGradient K_grad;         // grad(K) = grad(KL) / n
  double p_xe = 0.0;
  double p_01 = 0.0;
  double p_used = 0.0;          // risk fed to the bound (slope * p_xe for tilde variants)
  double kl = 0.0;
  double K = 0.0;
  double slope = 1.0;
  bool degenerate = false;      // separation too small; pure-KL direction used
};

// K for the posterior's current KL at n training examples and confidence delta.
double training_complexity(double kl, std::size_t n, double delta);

// Gradient of the configured objective on one batch under one noise draw.
// Tilde variants push the batch's (0-1, xe) pair into the slope estimator
// before reading it.
StepDirection objective_direction(const GaussianPosterior& post, const BatchView& batch,
                                  const TrainConfig& config, StepState& state,
                                  std::span<const double> noise, Exec exec = Exec::parallel);

// objective_direction followed by an SGD-with-momentum update of (mu, rho):
// v <- momentum * v + g, theta <- theta - learning_rate * v.
StepDirection objective_step(GaussianPosterior& post, const BatchView& batch,
                             const TrainConfig& config, StepState& state,
                             std::span<const double> noise, Exec exec = Exec::parallel);

struct HistoryRow {
  std::size_t epoch = 0;
  double emp_xe = 0.0;      // epoch mean of batch losses under training noise
  double emp_01 = 0.0;
  double kl_over_n = 0.0;   // at the end of the epoch
  double slope = 1.0;
  double cert_xe = 0.0;     // kl_inverse(emp_xe, K); a training-time estimate, not a certificate
  double cert_01 = 0.0;
};

void write_history_header(std::ostream& out);
void write_history_row(std::ostream& out, const HistoryRow& row);

struct TrainResult {
  GaussianPosterior posterior;
  std::vector<HistoryRow> history;
  std::size_t degenerate_steps = 0;
};

// Trains on the first config.n_train rows of `data`.
TrainResult train(const TrainConfig& config, const Dataset& data,
                  const std::function<void(const HistoryRow&)>& on_epoch = {});

struct McEstimate {
  double mean_xe = 0.0;
  double mean_01 = 0.0;
  std::size_t samples = 0;
};

// Mean over `mc_samples` whole-network draws of each draw's dataset-average
// loss. Draw s uses derive_seed(seed, s); the result does not depend on the
// worker count.
McEstimate mc_empirical_risks(const GaussianPosterior& post, const Dataset& data,
                              std::size_t mc_samples, std::uint64_t seed, double p_min,
                              Exec exec = Exec::parallel);

// kl_inverse(mean, ln(2 / delta_mc) / mc_samples).
double mc_bound_from_mean(double mean, std::size_t mc_samples, double delta_mc);

double mc_empirical_bound(const GaussianPosterior& post, const Dataset& data, LossKind loss_kind,
                          std::size_t mc_samples, double delta_mc, std::uint64_t seed,
                          double p_min = 1e-4);

struct Certificate {
  LossKind loss_kind = LossKind::ZeroOne;
  BoundKind bound_kind = BoundKind::MaurerInverse;
  double emp_risk_bound = 0.0;
  double kl_over_n = 0.0;
  double delta_total = 0.0;
  double bound_value = 0.0;  // clamped to 1 when vacuous
  bool vacuous = false;
};

Certificate final_certificate(double emp_bound, double kl_div, std::size_t n, double delta,
                              BoundKind bound_kind, LossKind loss_kind, double delta_mc = 0.0);

// Header `loss,bound,emp_bound,kl_over_n,delta_total,value,vacuous`.
void write_certificate_header(std::ostream& out);
void write_certificate_row(std::ostream& out, const Certificate& cert);

}  // namespace pbcert

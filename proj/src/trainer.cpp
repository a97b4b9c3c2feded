#include "pbcert/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "pbcert/kernels.hpp"

namespace pbcert {

namespace {

// Distinct derived streams per purpose.
constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kShuffleStream = 2;

constexpr double kRiskFloor = 1e-9;
constexpr double kTrainInverseTol = 1e-10;

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

double training_complexity(double kl, std::size_t n, double delta) {
  return complexity_term(ComplexityBudget(kl, n, delta));
}

StepDirection objective_direction(const GaussianPosterior& post, const BatchView& batch,
                                  const TrainConfig& config, StepState& state,
                                  std::span<const double> noise, Exec exec) {
  StepDirection dir;
  BackwardResult bw = backward(post, batch, noise, LossKind::BoundedXE, config.p_min, exec);
  dir.p_xe = bw.emp_loss;
  dir.p_01 = bw.emp_zero_one;
  dir.kl = bw.kl;
  dir.K = training_complexity(bw.kl, config.n_train, config.delta);

  const double inv_n = 1.0 / static_cast<double>(config.n_train);
  dir.K_grad = std::move(bw.kl_grad);
  for (double& g : dir.K_grad.mu) g *= inv_n;
  for (double& g : dir.K_grad.rho) g *= inv_n;
  dir.loss_grad = std::move(bw.loss_grad);

  double slope = 1.0;
  if (is_tilde(config.objective)) {
    state.slope.update(dir.p_01, dir.p_xe);
    slope = state.slope.slope_or_fallback();
  }
  dir.slope = slope;
  dir.p_used = std::clamp(slope * dir.p_xe, kRiskFloor, 1.0 - kRiskFloor);

  const BoundKind bound = objective_bound(config.objective);
  if (bound == BoundKind::MaurerInverse) {
    const double q = kl_inverse(dir.p_used, dir.K, kTrainInverseTol);
    try {
      dir.split = surrogate_coeffs(dir.p_used, q, slope);
    } catch (const DegenerateSeparation&) {
      dir.split = {0.0, 1.0};
      dir.degenerate = true;
    }
  } else {
    dir.split = relaxed_coeffs(bound, dir.p_used, dir.K);
    dir.split.c_L *= slope;
  }
  dir.split.c_K *= config.eta;

  const std::size_t n_params = dir.loss_grad.mu.size();
  dir.grad.mu.resize(n_params);
  dir.grad.rho.resize(n_params);
  for (std::size_t k = 0; k < n_params; ++k) {
    dir.grad.mu[k] = dir.split.c_L * dir.loss_grad.mu[k] + dir.split.c_K * dir.K_grad.mu[k];
    dir.grad.rho[k] = dir.split.c_L * dir.loss_grad.rho[k] + dir.split.c_K * dir.K_grad.rho[k];
  }
  return dir;
}

StepDirection objective_step(GaussianPosterior& post, const BatchView& batch,
                             const TrainConfig& config, StepState& state,
                             std::span<const double> noise, Exec exec) {
  StepDirection dir = objective_direction(post, batch, config, state, noise, exec);
  const std::size_t n_params = dir.grad.mu.size();
  if (state.velocity_mu.size() != n_params) {
    state.velocity_mu.assign(n_params, 0.0);
    state.velocity_rho.assign(n_params, 0.0);
  }
  auto mu = post.mu();
  auto rho = post.rho();
  for (std::size_t k = 0; k < n_params; ++k) {
    state.velocity_mu[k] = config.momentum * state.velocity_mu[k] + dir.grad.mu[k];
    state.velocity_rho[k] = config.momentum * state.velocity_rho[k] + dir.grad.rho[k];
    mu[k] -= config.learning_rate * state.velocity_mu[k];
    rho[k] -= config.learning_rate * state.velocity_rho[k];
  }
  ++state.steps;
  if (dir.degenerate) ++state.degenerate_steps;
  return dir;
}

void write_history_header(std::ostream& out) {
  out << "epoch,emp_xe,emp_01,kl_over_n,slope,cert_xe,cert_01\n";
}

void write_history_row(std::ostream& out, const HistoryRow& row) {
  out << row.epoch << ',' << g17(row.emp_xe) << ',' << g17(row.emp_01) << ','
      << g17(row.kl_over_n) << ',' << g17(row.slope) << ',' << g17(row.cert_xe) << ','
      << g17(row.cert_01) << '\n';
}

TrainResult train(const TrainConfig& config, const Dataset& data,
                  const std::function<void(const HistoryRow&)>& on_epoch) {
  config.validate();
  if (data.rows < config.n_train) {
    throw std::invalid_argument("train: dataset has " + std::to_string(data.rows) +
                                " rows, n_train = " + std::to_string(config.n_train));
  }
  const Architecture arch(config.arch);
  if (arch.input_dim() != data.dim) {
    throw std::invalid_argument("train: arch input size does not match the data dimension");
  }

  TrainResult result{GaussianPosterior::init_prior(arch, config.sigma0, config.seed), {}, 0};
  GaussianPosterior& post = result.posterior;
  StepState state(config.slope_window);

  const std::size_t n = config.n_train;
  const std::size_t dim = data.dim;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffleStream));
  const std::uint64_t noise_base = derive_seed(config.seed, kNoiseStream);

  std::vector<double> inputs;
  std::vector<std::uint8_t> labels;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double xe_sum = 0.0;
    double zo_sum = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t count = std::min(config.batch_size, n - start);
      inputs.resize(count * dim);
      labels.resize(count);
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t row = order[start + b];
        std::copy_n(data.pixels.begin() + static_cast<std::ptrdiff_t>(row * dim), dim,
                    inputs.begin() + static_cast<std::ptrdiff_t>(b * dim));
        labels[b] = data.labels[row];
      }
      const auto noise = draw_noise(arch, derive_seed(noise_base, state.steps));
      const StepDirection dir =
          objective_step(post, BatchView{inputs, labels}, config, state, noise);
      xe_sum += dir.p_xe * static_cast<double>(count);
      zo_sum += dir.p_01 * static_cast<double>(count);
    }

    HistoryRow row;
    row.epoch = epoch;
    row.emp_xe = xe_sum / static_cast<double>(n);
    row.emp_01 = zo_sum / static_cast<double>(n);
    const double kl = gaussian_kl(post);
    row.kl_over_n = kl / static_cast<double>(n);
    row.slope = is_tilde(config.objective) ? state.slope.slope_or_fallback() : 1.0;
    const double K = training_complexity(kl, n, config.delta);
    row.cert_xe = kl_inverse(row.emp_xe, K);
    row.cert_01 = kl_inverse(row.emp_01, K);
    result.history.push_back(row);
    if (on_epoch) on_epoch(row);
  }
  result.degenerate_steps = state.degenerate_steps;
  return result;
}

McEstimate mc_empirical_risks(const GaussianPosterior& post, const Dataset& data,
                              std::size_t mc_samples, std::uint64_t seed, double p_min,
                              Exec exec) {
  if (data.rows == 0) throw std::invalid_argument("mc_empirical_risks: empty dataset");
  if (mc_samples == 0) throw std::invalid_argument("mc_empirical_risks: mc_samples must be > 0");
  const Architecture& arch = post.arch();
  if (arch.input_dim() != data.dim) {
    throw std::invalid_argument("mc_empirical_risks: data dimension does not match architecture");
  }

  const SparseRows sparse(data);
  const std::vector<double> sigma = post.sigma();
  std::vector<std::uint64_t> seeds(mc_samples);
  for (std::size_t s = 0; s < mc_samples; ++s) seeds[s] = derive_seed(seed, s);
  std::vector<double> mean_xe(mc_samples);
  std::vector<double> mean_01(mc_samples);

  McSweep sweep;
  sweep.layers = arch.layers();
  sweep.mu = post.mu();
  sweep.sigma = sigma;
  sweep.inputs = sparse.view();
  sweep.labels = data.labels;
  sweep.sample_seeds = seeds;
  sweep.p_min = p_min;
  sweep.mean_xe = mean_xe;
  sweep.mean_01 = mean_01;
  if (exec == Exec::parallel) {
    kernels::omp::mc_sweep(sweep);
  } else {
    kernels::serial::mc_sweep(sweep);
  }

  McEstimate est;
  est.samples = mc_samples;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    est.mean_xe += mean_xe[s];
    est.mean_01 += mean_01[s];
  }
  est.mean_xe /= static_cast<double>(mc_samples);
  est.mean_01 /= static_cast<double>(mc_samples);
  return est;
}

double mc_bound_from_mean(double mean, std::size_t mc_samples, double delta_mc) {
  if (mc_samples == 0) throw std::invalid_argument("mc_bound_from_mean: mc_samples must be > 0");
  if (!(delta_mc > 0.0 && delta_mc < 1.0)) {
    throw std::invalid_argument("mc_bound_from_mean: delta_mc must lie in (0, 1)");
  }
  return kl_inverse(std::clamp(mean, 0.0, 1.0),
                    std::log(2.0 / delta_mc) / static_cast<double>(mc_samples));
}

double mc_empirical_bound(const GaussianPosterior& post, const Dataset& data, LossKind loss_kind,
                          std::size_t mc_samples, double delta_mc, std::uint64_t seed,
                          double p_min) {
  if (mc_samples < 100) throw std::invalid_argument("mc_empirical_bound: mc_samples must be >= 100");
  const McEstimate est = mc_empirical_risks(post, data, mc_samples, seed, p_min);
  const double mean = loss_kind == LossKind::ZeroOne ? est.mean_01 : est.mean_xe;
  return mc_bound_from_mean(mean, mc_samples, delta_mc);
}

Certificate final_certificate(double emp_bound, double kl_div, std::size_t n, double delta,
                              BoundKind bound_kind, LossKind loss_kind, double delta_mc) {
  if (!(emp_bound >= 0.0 && emp_bound <= 1.0)) {
    throw std::invalid_argument("final_certificate: emp_bound must lie in [0, 1]");
  }
  Certificate cert;
  cert.loss_kind = loss_kind;
  cert.bound_kind = bound_kind;
  cert.emp_risk_bound = emp_bound;
  cert.kl_over_n = kl_div / static_cast<double>(n);
  cert.delta_total = delta + delta_mc;
  const double K = complexity_term(ComplexityBudget(kl_div, n, delta));

  double raw = 1.0;
  if (bound_kind == BoundKind::MaurerInverse) {
    // kl_inverse caps just below 1; reaching the cap means no q < 1 is excluded.
    const double cap = 1.0 - kDefaultInverseTol;
    raw = (emp_bound >= cap || binary_kl(emp_bound, cap) <= K) ? 1.0 : kl_inverse(emp_bound, K);
  } else {
    raw = relaxed_bound(bound_kind, emp_bound, K);
  }
  cert.vacuous = raw >= 1.0;
  cert.bound_value = std::min(raw, 1.0);
  return cert;
}

void write_certificate_header(std::ostream& out) {
  out << "loss,bound,emp_bound,kl_over_n,delta_total,value,vacuous\n";
}

void write_certificate_row(std::ostream& out, const Certificate& cert) {
  out << to_string(cert.loss_kind) << ',' << to_string(cert.bound_kind) << ','
      << g17(cert.emp_risk_bound) << ',' << g17(cert.kl_over_n) << ',' << g17(cert.delta_total)
      << ',' << g17(cert.bound_value) << ',' << (cert.vacuous ? "true" : "false") << '\n';
}

}  // namespace pbcert

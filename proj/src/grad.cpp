#include "pbcert/grad.hpp"

#include <cmath>
#include <numeric>

namespace pbcert {

double xi(double p, double q) {
  if (!(p > 0.0 && q < 1.0 && p <= q)) {
    throw std::invalid_argument("xi: requires 0 < p <= q < 1");
  }
  if (q - p < kSeparationEps) {
    throw DegenerateSeparation("xi: q - p below separation threshold");
  }
  return 1.0 / ((1.0 - p) / (1.0 - q) - p / q);
}

GradientSplit implicit_coeffs(double p, double q) {
  const double x = xi(p, q);
  return {x * (std::log(q / p) + std::log((1.0 - p) / (1.0 - q))), x};
}

GradientSplit surrogate_coeffs(double p_t, double q_t, double slope) {
  if (!(slope > 0.0)) throw std::invalid_argument("surrogate_coeffs: slope must be > 0");
  GradientSplit split = implicit_coeffs(p_t, q_t);
  split.c_L *= slope;
  return split;
}

GradientSplit relaxed_coeffs(BoundKind kind, double p, double K) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("relaxed_coeffs: p must lie in (0, 1)");
  if (!(K > 0.0)) throw std::invalid_argument("relaxed_coeffs: K must be > 0");
  switch (kind) {
    case BoundKind::Pinsker:
      return {1.0, 1.0 / (4.0 * std::sqrt(K / 2.0))};
    case BoundKind::PBQ: {
      const double a = std::sqrt(p + K / 2.0);
      const double b = std::sqrt(K / 2.0);
      const double s = a + b;
      return {s / a, s * (0.5 / a + 0.5 / b)};
    }
    case BoundKind::TS:
      return {1.0 + std::sqrt(K / (2.0 * p)), 2.0 + std::sqrt(p / (2.0 * K))};
    case BoundKind::TRP: {
      const double half = K * (1.0 - p) / 2.0;
      const double a = std::sqrt(p + half);
      const double b = std::sqrt(half);
      const double s = a + b;
      const double d_dp = (1.0 - K / 2.0) / (2.0 * a) - (K / 2.0) / (2.0 * b);
      const double d_dK = ((1.0 - p) / 2.0) * (0.5 / a + 0.5 / b);
      return {2.0 * s * d_dp, 2.0 * s * d_dK};
    }
    case BoundKind::RTS:
      return {1.0 + std::sqrt(K / (2.0 * p)), 1.0 + std::sqrt(p / (2.0 * K))};
    case BoundKind::MaurerInverse:
      break;
  }
  throw std::invalid_argument("relaxed_coeffs: use implicit_coeffs for MaurerInverse");
}

double modulation_eta(const GradientSplit& target, const GradientSplit& surrogate) {
  if (!(target.c_L > 0.0 && target.c_K > 0.0 && surrogate.c_L > 0.0 && surrogate.c_K > 0.0)) {
    throw std::invalid_argument("modulation_eta: all coefficients must be > 0");
  }
  return (target.c_K * surrogate.c_L) / (target.c_L * surrogate.c_K);
}

SlopeEstimator::SlopeEstimator(std::size_t window) : window_(window) {
  if (window == 0) throw std::invalid_argument("SlopeEstimator: window must be >= 1");
}

void SlopeEstimator::update(double target_loss_obs, double surrogate_loss_obs) {
  target_.push_back(target_loss_obs);
  surrogate_.push_back(surrogate_loss_obs);
  if (target_.size() > window_) {
    target_.pop_front();
    surrogate_.pop_front();
  }
}

std::optional<double> SlopeEstimator::current_slope() const {
  if (target_.empty()) return std::nullopt;
  // Both windows hold the same count, so the ratio of sums is the ratio of means.
  const double num = std::accumulate(target_.begin(), target_.end(), 0.0);
  const double den = std::accumulate(surrogate_.begin(), surrogate_.end(), 0.0);
  if (!(den > 0.0) || !(num > 0.0)) return std::nullopt;
  return num / den;
}

}  // namespace pbcert

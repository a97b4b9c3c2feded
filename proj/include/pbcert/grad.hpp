#pragma once

// Gradient coefficients of the exact kl-inverse bound via implicit
// differentiation, the chain-rule correction for a surrogate loss, KL
// modulation, and the rolling slope between target and surrogate losses.

#include <cstddef>
#include <deque>
#include <optional>
#include <stdexcept>

#include "pbcert/kl.hpp"

namespace pbcert {

// q - p below this makes xi blow up.
inline constexpr double kSeparationEps = 1e-9;

class DegenerateSeparation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// d(bound) = c_L * d(empirical risk) + c_K * d(K).
struct GradientSplit {
  double c_L = 0.0;
  double c_K = 0.0;
};

// ((1 - p) / (1 - q) - p / q)^-1, i.e. 1 / (d kl(p||q) / dq).
double xi(double p, double q);

// Partial derivatives of q = kl_inverse(p, K) at a solved pair (p, q):
//   dq/dp = xi * (ln(q / p) + ln((1 - p) / (1 - q)))
//   dq/dK = xi
GradientSplit implicit_coeffs(double p, double q);

// Target loss approximated as slope * surrogate loss: the loss coefficient
// picks up the chain-rule factor, the K coefficient is unchanged. (p_t, q_t)
// are the target-loss risk and its bound.
GradientSplit surrogate_coeffs(double p_t, double q_t, double slope);

// Analytic partial derivatives (d/dp, d/dK) of relaxed_bound(kind, p, K).
// Requires 0 < p < 1 and K > 0.
GradientSplit relaxed_coeffs(BoundKind kind, double p, double K);

// eta such that (b_L, eta * b_K) is parallel to (c_L, c_K).
double modulation_eta(const GradientSplit& target, const GradientSplit& surrogate);

// Ratio of rolling means of target-loss and surrogate-loss observations over
// the last `window` updates. Single writer.
class SlopeEstimator {
 public:
  static constexpr std::size_t kDefaultWindow = 100;
  static constexpr double kFallbackSlope = 1.0;

  explicit SlopeEstimator(std::size_t window = kDefaultWindow);

  void update(double target_loss_obs, double surrogate_loss_obs);

  // nullopt before the first update or while either rolling mean is zero.
  std::optional<double> current_slope() const;
  double slope_or_fallback() const { return current_slope().value_or(kFallbackSlope); }

  std::size_t window() const { return window_; }
  std::size_t size() const { return target_.size(); }

 private:
  std::size_t window_;
  std::deque<double> target_;
  std::deque<double> surrogate_;
};

}  // namespace pbcert

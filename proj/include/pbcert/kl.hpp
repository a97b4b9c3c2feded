#pragma once

// Binary KL divergence, its inverse in the second argument, the PAC-Bayes
// complexity term, and the closed-form relaxations of the inverse.
//
// All logarithms are natural (nats).

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pbcert {

// kl(p||q) with q in {0,1} and p != q.
class InfiniteDivergence : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class BoundKind { MaurerInverse, Pinsker, PBQ, TS, TRP, RTS };

// Relaxations in tie-break order; MaurerInverse is not a relaxation.
inline constexpr std::array<BoundKind, 5> kRelaxedKinds = {
    BoundKind::Pinsker, BoundKind::PBQ, BoundKind::TS, BoundKind::TRP, BoundKind::RTS};

inline constexpr std::array<BoundKind, 6> kAllKinds = {
    BoundKind::Pinsker, BoundKind::PBQ, BoundKind::TS,
    BoundKind::TRP,     BoundKind::RTS, BoundKind::MaurerInverse};

// Lowercase names: maurer, pinsker, pbq, ts, trp, rts.
std::string_view to_string(BoundKind kind);
BoundKind parse_bound_kind(std::string_view name);

// Empirical risk p and a candidate true risk q, 0 <= p <= q <= 1.
class RiskPair {
 public:
  RiskPair(double p, double q);
  double p() const { return p_; }
  double q() const { return q_; }

 private:
  double p_;
  double q_;
};

// KL(Q||Q0), the sample count and the confidence parameter.
class ComplexityBudget {
 public:
  ComplexityBudget(double kl_div, std::uint64_t n, double delta);
  double kl_div() const { return kl_div_; }
  std::uint64_t n() const { return n_; }
  double delta() const { return delta_; }

 private:
  double kl_div_;
  std::uint64_t n_;
  double delta_;
};

inline constexpr double kDefaultInverseTol = 1e-12;

double binary_kl(double p, double q);

// sup{q in [p, 1) : kl(p||q) <= k}.
//
// Bisection on q over [p, 1 - tol] to full double resolution; kl(p||.) is
// strictly increasing for q > p. Returns the upper end of the final bracket,
// so the result never undershoots the true supremum by more than one ulp.
// p = 0 uses 1 - exp(-k), p >= 1 returns 1, k = 0 returns p, and the result
// is capped at 1 - tol when kl(p||1 - tol) <= k.
double kl_inverse(double p, double k, double tol = kDefaultInverseTol);

// K = (KL(Q||Q0) + ln(2 sqrt(n) / delta)) / n.
double complexity_term(const ComplexityBudget& budget);

// Closed-form upper bound on kl_inverse(p, K). Not clamped: values above 1
// are vacuous and returned as-is.
double relaxed_bound(BoundKind kind, double p, double K);

// The lower bound f(p, q) <= kl(p||q) that `relaxed_bound` inverts in
// closed form. Requires 0 < p <= q < 1.
double kl_lower_bound(BoundKind kind, const RiskPair& pair);

}  // namespace pbcert

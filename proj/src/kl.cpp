#include "pbcert/kl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pbcert {

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::MaurerInverse: return "maurer";
    case BoundKind::Pinsker: return "pinsker";
    case BoundKind::PBQ: return "pbq";
    case BoundKind::TS: return "ts";
    case BoundKind::TRP: return "trp";
    case BoundKind::RTS: return "rts";
  }
  return "unknown";
}

BoundKind parse_bound_kind(std::string_view name) {
  for (BoundKind kind : kAllKinds) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown bound kind: " + std::string(name));
}

RiskPair::RiskPair(double p, double q) : p_(p), q_(q) {
  if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("RiskPair: p and q must lie in [0, 1]");
  }
  if (p > q) throw std::invalid_argument("RiskPair: requires p <= q");
}

ComplexityBudget::ComplexityBudget(double kl_div, std::uint64_t n, double delta)
    : kl_div_(kl_div), n_(n), delta_(delta) {
  if (!(kl_div >= 0.0) || !std::isfinite(kl_div)) {
    throw std::invalid_argument("ComplexityBudget: kl_div must be finite and >= 0");
  }
  if (n < 8) throw std::invalid_argument("ComplexityBudget: n must be >= 8");
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("ComplexityBudget: delta must lie in (0, 1)");
  }
}

namespace {

// x * ln(x / y) with the convention 0 * ln(0 / y) = 0.
double xlogx_over_y(double x, double y) {
  if (x == 0.0) return 0.0;
  return x * std::log(x / y);
}

}  // namespace

double binary_kl(double p, double q) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binary_kl: p outside [0, 1]");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("binary_kl: q outside [0, 1]");
  if (p == q) return 0.0;
  if (q == 0.0 || q == 1.0) {
    throw InfiniteDivergence("binary_kl: q in {0, 1} with p != q");
  }
  const double value = xlogx_over_y(p, q) + xlogx_over_y(1.0 - p, 1.0 - q);
  return value > 0.0 ? value : 0.0;
}

double kl_inverse(double p, double k, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("kl_inverse: tol must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("kl_inverse: p outside [0, 1]");
  if (!(k >= 0.0)) throw std::invalid_argument("kl_inverse: k must be >= 0");
  if (p >= 1.0) return 1.0;
  if (k == 0.0) return p;
  if (p == 0.0) return std::min(-std::expm1(-k), 1.0 - tol);

  double lo = p;
  double hi = 1.0 - tol;
  if (hi <= lo || binary_kl(p, hi) <= k) return hi > lo ? hi : lo;

  for (int iter = 0; iter < 200; ++iter) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (binary_kl(p, mid) > k) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

double complexity_term(const ComplexityBudget& budget) {
  const double n = static_cast<double>(budget.n());
  return (budget.kl_div() + std::log(2.0 * std::sqrt(n) / budget.delta())) / n;
}

double relaxed_bound(BoundKind kind, double p, double K) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("relaxed_bound: p outside [0, 1]");
  if (!(K >= 0.0)) throw std::invalid_argument("relaxed_bound: K must be >= 0");
  switch (kind) {
    case BoundKind::Pinsker:
      return p + std::sqrt(K / 2.0);
    case BoundKind::PBQ:
      // (sqrt(p + K/2) + sqrt(K/2))^2 expanded.
      return p + K + std::sqrt(K * K + 2.0 * p * K);
    case BoundKind::TS:
      return p + 2.0 * K + std::sqrt(2.0 * p * K);
    case BoundKind::TRP: {
      const double half = K * (1.0 - p) / 2.0;
      return p + 2.0 * half + 2.0 * std::sqrt((p + half) * half);
    }
    case BoundKind::RTS:
      return p + K + std::sqrt(2.0 * p * K);
    case BoundKind::MaurerInverse:
      break;
  }
  throw std::invalid_argument("relaxed_bound: MaurerInverse has no closed form");
}

double kl_lower_bound(BoundKind kind, const RiskPair& pair) {
  const double p = pair.p();
  const double q = pair.q();
  if (!(p > 0.0 && q < 1.0)) {
    throw std::invalid_argument("kl_lower_bound: requires 0 < p <= q < 1");
  }
  const double gap = q - p;
  switch (kind) {
    case BoundKind::Pinsker:
      return 2.0 * gap * gap;
    case BoundKind::PBQ:
      return gap * gap / (2.0 * q);
    case BoundKind::TS: {
      const double value = (2.0 * q - p - std::sqrt(4.0 * q * p - 3.0 * p * p)) / 4.0;
      return value > 0.0 ? value : 0.0;
    }
    case BoundKind::TRP:
      return gap * gap / (2.0 * q * (1.0 - p));
    case BoundKind::RTS: {
      const double value = q - std::sqrt(2.0 * q * p - p * p);
      return value > 0.0 ? value : 0.0;
    }
    case BoundKind::MaurerInverse:
      break;
  }
  throw std::invalid_argument("kl_lower_bound: MaurerInverse has no closed-form lower bound");
}

}  // namespace pbcert

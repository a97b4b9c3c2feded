#pragma once

// Side-by-side evaluation of every bound kind over (p, K) grids.

#include <array>
#include <ostream>
#include <span>
#include <vector>

#include "pbcert/kl.hpp"

namespace pbcert {

struct AtlasCell {
  double p = 0.0;
  double K = 0.0;
  // Raw (unclamped) values indexed by static_cast<int>(BoundKind).
  std::array<double, 6> values{};
  BoundKind tightest = BoundKind::Pinsker;

  double value(BoundKind kind) const { return values[static_cast<int>(kind)]; }
};

AtlasCell compare_bounds(double p, double K);

// Row-major over (p, K): all K values for p_grid[0] first.
std::vector<AtlasCell> tightest_map(std::span<const double> p_grid,
                                    std::span<const double> K_grid);

struct CurveRow {
  double K = 0.0;
  std::array<double, 6> clamped{};
  std::array<bool, 6> vacuous{};

  double value(BoundKind kind) const { return clamped[static_cast<int>(kind)]; }
};

std::vector<CurveRow> emit_curves(double p, std::span<const double> K_range);

// `count` points log-spaced over [lo, hi], both ends included.
std::vector<double> log_space(double lo, double hi, std::size_t count);

struct AtlasGridDefaults {
  static constexpr double p_min = 1e-3;
  static constexpr double p_max = 0.99;
  static constexpr double k_min = 1e-4;
  static constexpr double k_max = 2.0;
  static constexpr std::size_t points = 60;
};

// Header `p,K,pinsker,pbq,ts,trp,rts,maurer,tightest`, %.17g values.
void write_atlas_csv(std::ostream& out, std::span<const AtlasCell> cells);

// Header `p,K,pinsker,pbq,ts,trp,rts,maurer` followed by one vacuous flag
// column per kind.
void write_curves_csv(std::ostream& out, double p, std::span<const CurveRow> rows);

}  // namespace pbcert

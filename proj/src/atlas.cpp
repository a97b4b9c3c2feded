#include "pbcert/atlas.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <string>

namespace pbcert {

namespace {

std::string format_g17(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

constexpr int idx(BoundKind kind) { return static_cast<int>(kind); }

}  // namespace

AtlasCell compare_bounds(double p, double K) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("compare_bounds: p must lie in (0, 1)");
  if (!(K >= 0.0)) throw std::invalid_argument("compare_bounds: K must be >= 0");

  AtlasCell cell;
  cell.p = p;
  cell.K = K;
  for (BoundKind kind : kRelaxedKinds) cell.values[idx(kind)] = relaxed_bound(kind, p, K);
  cell.values[idx(BoundKind::MaurerInverse)] = kl_inverse(p, K);

  // Strict comparison keeps the earliest kind on ties.
  cell.tightest = kRelaxedKinds.front();
  for (BoundKind kind : kRelaxedKinds) {
    if (cell.values[idx(kind)] < cell.values[idx(cell.tightest)]) cell.tightest = kind;
  }
  return cell;
}

std::vector<AtlasCell> tightest_map(std::span<const double> p_grid,
                                    std::span<const double> K_grid) {
  if (p_grid.empty() || K_grid.empty()) {
    throw std::invalid_argument("tightest_map: grids must be nonempty");
  }
  if (!std::is_sorted(p_grid.begin(), p_grid.end()) ||
      !std::is_sorted(K_grid.begin(), K_grid.end())) {
    throw std::invalid_argument("tightest_map: grids must be sorted ascending");
  }
  const auto rows = static_cast<std::ptrdiff_t>(p_grid.size());
  const std::size_t cols = K_grid.size();
  std::vector<AtlasCell> cells(p_grid.size() * cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      cells[static_cast<std::size_t>(i) * cols + j] = compare_bounds(p_grid[i], K_grid[j]);
    }
  }
  return cells;
}

std::vector<CurveRow> emit_curves(double p, std::span<const double> K_range) {
  std::vector<CurveRow> rows;
  rows.reserve(K_range.size());
  for (double K : K_range) {
    const AtlasCell cell = compare_bounds(p, K);
    CurveRow row;
    row.K = K;
    for (std::size_t k = 0; k < row.clamped.size(); ++k) {
      row.vacuous[k] = cell.values[k] >= 1.0;
      row.clamped[k] = std::min(cell.values[k], 1.0);
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> log_space(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0 && hi >= lo) || count == 0) {
    throw std::invalid_argument("log_space: requires 0 < lo <= hi and count > 0");
  }
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace {

// Column order shared by both CSV writers.
constexpr std::array<BoundKind, 6> kCsvOrder = kAllKinds;

}  // namespace

void write_atlas_csv(std::ostream& out, std::span<const AtlasCell> cells) {
  out << "p,K,pinsker,pbq,ts,trp,rts,maurer,tightest\n";
  for (const AtlasCell& cell : cells) {
    out << format_g17(cell.p) << ',' << format_g17(cell.K);
    for (BoundKind kind : kCsvOrder) out << ',' << format_g17(cell.value(kind));
    out << ',' << to_string(cell.tightest) << '\n';
  }
}

void write_curves_csv(std::ostream& out, double p, std::span<const CurveRow> rows) {
  out << "p,K,pinsker,pbq,ts,trp,rts,maurer";
  for (BoundKind kind : kCsvOrder) out << ",vacuous_" << to_string(kind);
  out << '\n';
  for (const CurveRow& row : rows) {
    out << format_g17(p) << ',' << format_g17(row.K);
    for (BoundKind kind : kCsvOrder) out << ',' << format_g17(row.value(kind));
    for (BoundKind kind : kCsvOrder) out << ',' << (row.vacuous[idx(kind)] ? 1 : 0);
    out << '\n';
  }
}

}  // namespace pbcert

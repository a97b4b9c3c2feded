#include "pbcert/synth_digits.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "pbcert/dataset.hpp"

namespace pbcert {

namespace {

struct Point {
  double x;
  double y;
};
using Stroke = std::vector<Point>;
using Glyph = std::vector<Stroke>;

Stroke ellipse(double cx, double cy, double rx, double ry, double from = 0.0,
               double to = 2.0 * std::numbers::pi, int segments = 18) {
  Stroke s;
  for (int k = 0; k <= segments; ++k) {
    const double t = from + (to - from) * k / segments;
    s.push_back({cx + rx * std::cos(t), cy + ry * std::sin(t)});
  }
  return s;
}

// Unit-box glyphs, y pointing down.
const std::array<Glyph, 10>& glyphs() {
  static const std::array<Glyph, 10> table = [] {
    const double pi = std::numbers::pi;
    std::array<Glyph, 10> g;
    g[0] = {ellipse(0.5, 0.5, 0.27, 0.40)};
    g[1] = {{{0.36, 0.24}, {0.52, 0.10}, {0.52, 0.90}}};
    g[2] = {{{0.24, 0.30}, {0.32, 0.15}, {0.50, 0.09}, {0.68, 0.15}, {0.75, 0.30},
             {0.68, 0.47}, {0.25, 0.90}, {0.80, 0.90}}};
    g[3] = {{{0.25, 0.16}, {0.50, 0.09}, {0.72, 0.19}, {0.72, 0.37}, {0.48, 0.49},
             {0.74, 0.61}, {0.75, 0.80}, {0.52, 0.91}, {0.24, 0.84}}};
    g[4] = {{{0.66, 0.90}, {0.66, 0.10}, {0.20, 0.64}, {0.82, 0.64}}};
    g[5] = {{{0.76, 0.10}, {0.31, 0.10}, {0.27, 0.46}, {0.55, 0.41}, {0.74, 0.54},
             {0.74, 0.76}, {0.55, 0.91}, {0.24, 0.85}}};
    g[6] = {{{0.70, 0.11}, {0.46, 0.20}, {0.31, 0.44}, {0.28, 0.70}, {0.40, 0.90},
             {0.60, 0.90}, {0.72, 0.72}, {0.64, 0.55}, {0.45, 0.50}, {0.30, 0.62}}};
    g[7] = {{{0.22, 0.10}, {0.79, 0.10}, {0.46, 0.90}}};
    g[8] = {ellipse(0.5, 0.29, 0.20, 0.19), ellipse(0.5, 0.70, 0.25, 0.21)};
    g[9] = {ellipse(0.5, 0.32, 0.22, 0.21, -0.1 * pi, 2.0 * pi), {{0.72, 0.30}, {0.66, 0.90}}};
    return g;
  }();
  return table;
}

double segment_distance(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p.x - (a.x + t * dx);
  const double ey = p.y - (a.y + t * dy);
  return std::sqrt(ex * ex + ey * ey);
}

void render(const Glyph& glyph, std::mt19937_64& rng, std::uint8_t* out) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  const double angle = 0.22 * uni(rng);
  const double scale = 1.0 + 0.12 * uni(rng);
  const double aspect = 1.0 + 0.12 * uni(rng);
  const double shear = 0.25 * uni(rng);
  const double tx = 1.6 * uni(rng);
  const double ty = 1.6 * uni(rng);
  const double pen = 1.35 + 0.55 * (uni(rng) + 1.0) / 2.0;
  const double jitter = 0.035;

  const double c = std::cos(angle);
  const double s = std::sin(angle);
  // Glyph box maps onto the central 20x20 pixels, as in MNIST.
  auto place = [&](Point p) {
    const double gx = (p.x - 0.5) * 20.0 * scale * aspect;
    const double gy = (p.y - 0.5) * 20.0 * scale;
    const double sx = gx + shear * gy;
    return Point{14.0 + tx + c * sx - s * gy, 14.0 + ty + s * sx + c * gy};
  };

  std::vector<std::pair<Point, Point>> segments;
  for (const Stroke& stroke : glyph) {
    Stroke moved;
    for (Point p : stroke) moved.push_back(place({p.x + jitter * uni(rng), p.y + jitter * uni(rng)}));
    for (std::size_t k = 0; k + 1 < moved.size(); ++k) segments.emplace_back(moved[k], moved[k + 1]);
  }

  for (int y = 0; y < 28; ++y) {
    for (int x = 0; x < 28; ++x) {
      const Point center{x + 0.5, y + 0.5};
      double d = 1e9;
      for (const auto& [a, b] : segments) d = std::min(d, segment_distance(center, a, b));
      const double ink = std::clamp(pen - d + 0.5, 0.0, 1.0);
      out[y * 28 + x] = static_cast<std::uint8_t>(std::lround(255.0 * ink));
    }
  }
}

}  // namespace

SynthDigits make_synth_digits(std::size_t count, std::uint64_t seed) {
  SynthDigits out;
  out.count = count;
  out.pixels.resize(count * 28 * 28);
  out.labels.resize(count);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> digit(0, 9);
  for (std::size_t i = 0; i < count; ++i) {
    const int label = digit(rng);
    out.labels[i] = static_cast<std::uint8_t>(label);
    render(glyphs()[static_cast<std::size_t>(label)], rng, out.pixels.data() + i * 28 * 28);
  }
  return out;
}

std::pair<std::filesystem::path, std::filesystem::path> write_synth_digits(
    const std::filesystem::path& dir, const std::string& prefix, std::size_t count,
    std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  const SynthDigits digits = make_synth_digits(count, seed);
  const auto images = dir / (prefix + "-images-idx3-ubyte");
  const auto labels = dir / (prefix + "-labels-idx1-ubyte");
  write_idx_images(images, count, 28, 28, digits.pixels);
  write_idx_labels(labels, digits.labels);
  return {images, labels};
}

}  // namespace pbcert

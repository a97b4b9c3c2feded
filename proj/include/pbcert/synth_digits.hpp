#pragma once

// Procedural 28x28 handwritten-style digits for running the pipeline when
// the MNIST files are not at hand. Each glyph is a set of strokes that gets
// a random affine transform, per-point jitter and a random pen width before
// anti-aliased rendering.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pbcert {

struct SynthDigits {
  std::size_t count = 0;
  std::vector<std::uint8_t> pixels;  // count x 28 x 28, row-major
  std::vector<std::uint8_t> labels;
};

SynthDigits make_synth_digits(std::size_t count, std::uint64_t seed);

// Writes `<prefix>-images-idx3-ubyte` and `<prefix>-labels-idx1-ubyte` into
// `dir`; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_synth_digits(
    const std::filesystem::path& dir, const std::string& prefix, std::size_t count,
    std::uint64_t seed);

}  // namespace pbcert

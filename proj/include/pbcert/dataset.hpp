#pragma once

// MNIST-format (IDX) ingestion and a dense/sparse in-memory dataset.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbcert/kernels.hpp"
#include "pbcert/prob_net.hpp"

namespace pbcert {

// Malformed IDX input. `field()` names the offending header field or
// payload, `offset()` is the byte position where parsing stopped.
class IdxParseError : public std::runtime_error {
 public:
  IdxParseError(std::string field, std::size_t offset, const std::string& what);
  const std::string& field() const { return field_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string field_;
  std::size_t offset_;
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct Dataset {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> pixels;        // rows x dim, scaled to [0, 1]
  std::vector<std::uint8_t> labels;  // 0..9

  // First `count` rows (or all when count >= rows).
  Dataset head(std::size_t count) const;
  BatchView view() const { return {pixels, labels}; }
};

// Compressed copy of a dataset's nonzero pixels for the evaluation kernels.
class SparseRows {
 public:
  explicit SparseRows(const Dataset& data);
  SparseRowsView view() const { return {offsets_, columns_, values_}; }

 private:
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> columns_;
  std::vector<double> values_;
};

// Big-endian IDX: images magic 0x00000803 with dims n x 28 x 28, labels
// magic 0x00000801; pixels scaled by 1/255; labels must be 0..9.
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path);

// Same checks on in-memory buffers.
Dataset parse_mnist(const std::vector<std::uint8_t>& image_bytes,
                    const std::vector<std::uint8_t>& label_bytes);

void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t rows,
                      std::size_t cols, const std::vector<std::uint8_t>& pixels);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

}  // namespace pbcert

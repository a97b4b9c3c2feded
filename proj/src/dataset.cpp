#include "pbcert/dataset.hpp"

#include <fstream>
#include <iterator>

namespace pbcert {

IdxParseError::IdxParseError(std::string field, std::size_t offset, const std::string& what)
    : std::runtime_error(what + " (field '" + field + "', byte offset " + std::to_string(offset) +
                         ")"),
      field_(std::move(field)),
      offset_(offset) {}

Dataset Dataset::head(std::size_t count) const {
  if (count >= rows) return *this;
  Dataset out;
  out.rows = count;
  out.dim = dim;
  out.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(count * dim));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(count));
  return out;
}

SparseRows::SparseRows(const Dataset& data) {
  offsets_.reserve(data.rows + 1);
  offsets_.push_back(0);
  for (std::size_t r = 0; r < data.rows; ++r) {
    for (std::size_t c = 0; c < data.dim; ++c) {
      const double v = data.pixels[r * data.dim + c];
      if (v != 0.0) {
        columns_.push_back(static_cast<std::uint32_t>(c));
        values_.push_back(v);
      }
    }
    offsets_.push_back(static_cast<std::uint32_t>(columns_.size()));
  }
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t offset,
                        const std::string& field) {
  if (bytes.size() < offset + 4) {
    throw IdxParseError(field, bytes.size(), "truncated header");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char buf[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                       static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(buf, 4);
}

}  // namespace

Dataset parse_mnist(const std::vector<std::uint8_t>& image_bytes,
                    const std::vector<std::uint8_t>& label_bytes) {
  if (read_be32(image_bytes, 0, "image.magic") != kIdxImageMagic) {
    throw IdxParseError("image.magic", 0, "image file magic is not 0x00000803");
  }
  const std::uint32_t count = read_be32(image_bytes, 4, "image.count");
  const std::uint32_t rows = read_be32(image_bytes, 8, "image.rows");
  const std::uint32_t cols = read_be32(image_bytes, 12, "image.cols");
  if (rows != 28 || cols != 28) {
    throw IdxParseError(rows != 28 ? "image.rows" : "image.cols", rows != 28 ? 8 : 12,
                        "image dimensions must be 28 x 28");
  }
  const std::size_t dim = std::size_t{rows} * cols;
  const std::size_t payload = std::size_t{count} * dim;
  if (image_bytes.size() < 16 + payload) {
    throw IdxParseError("image.pixels", image_bytes.size(),
                        "truncated image payload: expected " + std::to_string(16 + payload) +
                            " bytes");
  }

  if (read_be32(label_bytes, 0, "label.magic") != kIdxLabelMagic) {
    throw IdxParseError("label.magic", 0, "label file magic is not 0x00000801");
  }
  const std::uint32_t label_count = read_be32(label_bytes, 4, "label.count");
  if (label_count != count) {
    throw IdxParseError("label.count", 4,
                        "label count " + std::to_string(label_count) +
                            " does not match image count " + std::to_string(count));
  }
  if (label_bytes.size() < 8 + std::size_t{label_count}) {
    throw IdxParseError("label.values", label_bytes.size(), "truncated label payload");
  }

  Dataset data;
  data.rows = count;
  data.dim = dim;
  data.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint8_t label = label_bytes[8 + i];
    if (label > 9) {
      throw IdxParseError("label.values", 8 + i,
                          "label " + std::to_string(label) + " outside 0..9");
    }
    data.labels[i] = label;
  }
  data.pixels.resize(payload);
  for (std::size_t i = 0; i < payload; ++i) {
    data.pixels[i] = static_cast<double>(image_bytes[16 + i]) / 255.0;
  }
  return data;
}

Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path) {
  return parse_mnist(read_file(images_path), read_file(labels_path));
}

void write_idx_images(const std::filesystem::path& path, std::size_t count, std::size_t rows,
                      std::size_t cols, const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != count * rows * cols) {
    throw std::invalid_argument("write_idx_images: pixel buffer size mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(count));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

}  // namespace pbcert

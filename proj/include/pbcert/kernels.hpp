#pragma once

// Dense-layer and Monte Carlo evaluation kernels.
//
// Every kernel exists twice with identical signatures: `serial` is the
// reference implementation and `omp` splits the outer loop across OpenMP
// threads. Each output element is produced by a single thread with the same
// inner summation order as the serial path, so the two agree bit for bit
// regardless of thread count.
//
// Weight blocks are stored input-major: element (j, i) connecting input j to
// output i lives at j * out + i.

#include <cstddef>
#include <cstdint>
#include <span>

namespace pbcert {

enum class Exec { serial, parallel };

// Compressed rows of a (mostly zero) input matrix.
struct SparseRowsView {
  std::span<const std::uint32_t> row_offsets;  // rows + 1 entries
  std::span<const std::uint32_t> columns;
  std::span<const double> values;
  std::size_t rows() const { return row_offsets.empty() ? 0 : row_offsets.size() - 1; }
};

struct LayerDims {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t weight_offset = 0;  // into the flat parameter vector
  std::size_t bias_offset = 0;
};

// Everything one Monte Carlo sweep needs: the posterior in flat form, the
// data and the per-sample seeds. Results land in per-sample slots.
struct McSweep {
  std::span<const LayerDims> layers;
  std::span<const double> mu;
  std::span<const double> sigma;
  SparseRowsView inputs;
  std::span<const std::uint8_t> labels;
  std::span<const std::uint64_t> sample_seeds;
  double p_min = 1e-4;
  std::span<double> mean_xe;    // one slot per sample
  std::span<double> mean_01;    // one slot per sample
};

namespace kernels {

namespace serial {

// out[b, :] = bias + sum_j in[b, j] * W[j, :]
void affine_forward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::size_t batch, std::size_t n_in,
                    std::size_t n_out, std::span<double> out);

// d_in[b, j] = sum_i d_out[b, i] * W[j, i]
void affine_backward_input(std::span<const double> d_out, std::span<const double> weights,
                           std::size_t batch, std::size_t n_in, std::size_t n_out,
                           std::span<double> d_in);

// d_weights[j, :] += sum_b in[b, j] * d_out[b, :]; d_bias += sum_b d_out[b, :]
void affine_backward_params(std::span<const double> in, std::span<const double> d_out,
                            std::size_t batch, std::size_t n_in, std::size_t n_out,
                            std::span<double> d_weights, std::span<double> d_bias);

// One whole-network weight draw per sample, evaluated on every input row.
// Weights are drawn in double precision, then rounded to float32 for the
// forward passes; losses are computed in double from the float32 logits.
void mc_sweep(const McSweep& sweep);

}  // namespace serial

// Same contracts as `serial`.
namespace omp {

void affine_forward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::size_t batch, std::size_t n_in,
                    std::size_t n_out, std::span<double> out);

void affine_backward_input(std::span<const double> d_out, std::span<const double> weights,
                           std::size_t batch, std::size_t n_in, std::size_t n_out,
                           std::span<double> d_in);

void affine_backward_params(std::span<const double> in, std::span<const double> d_out,
                            std::size_t batch, std::size_t n_in, std::size_t n_out,
                            std::span<double> d_weights, std::span<double> d_bias);

void mc_sweep(const McSweep& sweep);

}  // namespace omp

}  // namespace kernels

// splitmix64 mix of (base, index); used for every per-index derived stream.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index);

}  // namespace pbcert

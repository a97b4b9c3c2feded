#include <cmath>
#include <vector>

#include "kernel_detail.hpp"
#include "pbcert/kernels.hpp"

namespace pbcert {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace kernels::serial {

void affine_forward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::size_t batch, std::size_t n_in,
                    std::size_t n_out, std::span<double> out) {
  for (std::size_t b = 0; b < batch; ++b) {
    double* z = out.data() + b * n_out;
    for (std::size_t i = 0; i < n_out; ++i) z[i] = bias[i];
    const double* a = in.data() + b * n_in;
    for (std::size_t j = 0; j < n_in; ++j) {
      if (a[j] == 0.0) continue;
      const double* w = weights.data() + j * n_out;
      for (std::size_t i = 0; i < n_out; ++i) z[i] = std::fma(a[j], w[i], z[i]);
    }
  }
}

void affine_backward_input(std::span<const double> d_out, std::span<const double> weights,
                           std::size_t batch, std::size_t n_in, std::size_t n_out,
                           std::span<double> d_in) {
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = d_out.data() + b * n_out;
    for (std::size_t j = 0; j < n_in; ++j) {
      const double* w = weights.data() + j * n_out;
      double acc = 0.0;
      for (std::size_t i = 0; i < n_out; ++i) acc = std::fma(g[i], w[i], acc);
      d_in[b * n_in + j] = acc;
    }
  }
}

void affine_backward_params(std::span<const double> in, std::span<const double> d_out,
                            std::size_t batch, std::size_t n_in, std::size_t n_out,
                            std::span<double> d_weights, std::span<double> d_bias) {
  for (std::size_t j = 0; j < n_in; ++j) {
    double* dw = d_weights.data() + j * n_out;
    for (std::size_t b = 0; b < batch; ++b) {
      const double a = in[b * n_in + j];
      if (a == 0.0) continue;
      const double* g = d_out.data() + b * n_out;
      for (std::size_t i = 0; i < n_out; ++i) dw[i] = std::fma(a, g[i], dw[i]);
    }
  }
  for (std::size_t b = 0; b < batch; ++b) {
    const double* g = d_out.data() + b * n_out;
    for (std::size_t i = 0; i < n_out; ++i) d_bias[i] += g[i];
  }
}

void mc_sweep(const McSweep& sweep) {
  const detail::BlockedColumns blocked = detail::block_columns(sweep.inputs);
  detail::McScratch scratch;
  for (std::size_t s = 0; s < sweep.sample_seeds.size(); ++s) {
    detail::evaluate_one_sample(sweep, blocked, s, scratch);
  }
}

}  // namespace kernels::serial
}  // namespace pbcert

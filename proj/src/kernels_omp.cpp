#include <omp.h>

#include <cmath>
#include <vector>

#include "kernel_detail.hpp"
#include "pbcert/kernels.hpp"

namespace pbcert::kernels::omp {

void affine_forward(std::span<const double> in, std::span<const double> weights,
                    std::span<const double> bias, std::size_t batch, std::size_t n_in,
                    std::size_t n_out, std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < rows; ++b) {
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
  const auto rows = static_cast<std::ptrdiff_t>(batch);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < rows; ++b) {
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
  // Each thread owns whole weight rows; the batch is summed in order inside a row.
  const auto inputs = static_cast<std::ptrdiff_t>(n_in);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < inputs; ++j) {
    double* dw = d_weights.data() + j * n_out;
    for (std::size_t b = 0; b < batch; ++b) {
      const double a = in[b * n_in + j];
      if (a == 0.0) continue;
      const double* g = d_out.data() + b * n_out;
      for (std::size_t i = 0; i < n_out; ++i) dw[i] = std::fma(a, g[i], dw[i]);
    }
  }
  const auto outputs = static_cast<std::ptrdiff_t>(n_out);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < outputs; ++i) {
    double acc = d_bias[i];
    for (std::size_t b = 0; b < batch; ++b) acc += d_out[b * n_out + i];
    d_bias[i] = acc;
  }
}

void mc_sweep(const McSweep& sweep) {
  const auto samples = static_cast<std::ptrdiff_t>(sweep.sample_seeds.size());
  const detail::BlockedColumns blocked = detail::block_columns(sweep.inputs);
#pragma omp parallel
  {
    detail::McScratch scratch;
#pragma omp for schedule(dynamic, 4)
    for (std::ptrdiff_t s = 0; s < samples; ++s) {
      detail::evaluate_one_sample(sweep, blocked, static_cast<std::size_t>(s), scratch);
    }
  }
}

}  // namespace pbcert::kernels::omp

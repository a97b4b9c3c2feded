#pragma once

// Scalar pieces shared by the serial and OpenMP kernels and by prob_net.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#if defined(__FMA__)
#include <immintrin.h>
#endif

#include "pbcert/kernels.hpp"

namespace pbcert::detail {

// One N(0, 1) draw per element, in order, from a fresh stream.
inline void fill_standard_normal(std::uint64_t seed, std::span<double> out) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& x : out) x = normal(rng);
}

// Bounded cross-entropy of one logit row. When `grad` is non-null it receives
// d(loss)/d(logits).
inline double bounded_xe(const double* logits, std::size_t classes, std::size_t label,
                         double p_min, double* grad) {
  double top = logits[0];
  for (std::size_t c = 1; c < classes; ++c) top = std::max(top, logits[c]);
  double total = 0.0;
  for (std::size_t c = 0; c < classes; ++c) total += std::exp(logits[c] - top);
  const double log_norm = top + std::log(total);
  const double log_p = logits[label] - log_norm;
  const double log_p_min = std::log(p_min);
  const double scale = -log_p_min;  // ln(1 / p_min)
  if (log_p <= log_p_min) {
    if (grad) std::fill(grad, grad + classes, 0.0);
    return 1.0;
  }
  if (grad) {
    for (std::size_t c = 0; c < classes; ++c) grad[c] = std::exp(logits[c] - log_norm) / scale;
    grad[label] -= 1.0 / scale;
  }
  const double loss = -log_p / scale;
  return loss > 0.0 ? loss : 0.0;
}

// argmax with ties to the lowest index.
inline int zero_one(const double* logits, std::size_t classes, std::size_t label) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < classes; ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best == label ? 0 : 1;
}

inline void relu_inplace(std::span<double> values) {
  for (double& v : values) v = v > 0.0 ? v : 0.0;
}

// Forward pass of one sparse input row through every layer. `weights` is the
// full flat parameter vector. Returns the logits, which live in one of the
// two scratch buffers.
inline std::span<const double> forward_sparse_row(std::span<const LayerDims> layers,
                                                  std::span<const double> weights,
                                                  std::span<const std::uint32_t> cols,
                                                  std::span<const double> vals,
                                                  std::vector<double>& scratch_a,
                                                  std::vector<double>& scratch_b) {
  const LayerDims& first = layers.front();
  scratch_a.assign(weights.begin() + first.bias_offset,
                   weights.begin() + first.bias_offset + first.out);
  const double* w0 = weights.data() + first.weight_offset;
  double* z = scratch_a.data();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    const double a = vals[k];
    const double* row = w0 + static_cast<std::size_t>(cols[k]) * first.out;
    for (std::size_t i = 0; i < first.out; ++i) z[i] = std::fma(a, row[i], z[i]);
  }

  std::vector<double>* cur = &scratch_a;
  std::vector<double>* next = &scratch_b;
  for (std::size_t l = 1; l < layers.size(); ++l) {
    const LayerDims& layer = layers[l];
    relu_inplace(*cur);
    next->assign(weights.begin() + layer.bias_offset,
                 weights.begin() + layer.bias_offset + layer.out);
    const double* w = weights.data() + layer.weight_offset;
    const double* in = cur->data();
    double* out = next->data();
    for (std::size_t j = 0; j < layer.in; ++j) {
      const double a = in[j];
      if (a == 0.0) continue;
      const double* row = w + j * layer.out;
      for (std::size_t i = 0; i < layer.out; ++i) out[i] = std::fma(a, row[i], out[i]);
    }
    std::swap(cur, next);
  }
  return {cur->data(), layers.back().out};
}

// Monte Carlo evaluation runs in float32. Each layer is repacked with its
// output stride padded to a whole number of 8-lane vectors.
using f32x8 = float __attribute__((vector_size(32)));
inline constexpr std::size_t kLanes = 8;

struct PackedNet {
  std::vector<std::size_t> in, out, stride, w_off, b_off;
  std::vector<f32x8> data;  // weights then bias per layer, zero padded
};

inline f32x8 madd(float a, f32x8 x, f32x8 acc) {
#if defined(__FMA__)
  return _mm256_fmadd_ps(_mm256_set1_ps(a), x, acc);
#else
  return a * x + acc;
#endif
}

inline std::size_t padded_vectors(std::size_t n) { return (n + kLanes - 1) / kLanes; }

inline void pack_weights(std::span<const LayerDims> layers, std::span<const double> weights,
                         PackedNet& net) {
  const std::size_t L = layers.size();
  net.in.resize(L);
  net.out.resize(L);
  net.stride.resize(L);
  net.w_off.resize(L);
  net.b_off.resize(L);
  std::size_t total = 0;
  for (std::size_t l = 0; l < L; ++l) {
    net.in[l] = layers[l].in;
    net.out[l] = layers[l].out;
    net.stride[l] = padded_vectors(layers[l].out);
    net.w_off[l] = total;
    total += net.stride[l] * layers[l].in;
    net.b_off[l] = total;
    total += net.stride[l];
  }
  net.data.assign(total, f32x8{});
  for (std::size_t l = 0; l < L; ++l) {
    float* w = reinterpret_cast<float*>(net.data.data() + net.w_off[l]);
    const std::size_t ld = net.stride[l] * kLanes;
    for (std::size_t j = 0; j < layers[l].in; ++j) {
      for (std::size_t i = 0; i < layers[l].out; ++i) {
        w[j * ld + i] = static_cast<float>(weights[layers[l].weight_offset + j * layers[l].out + i]);
      }
    }
    float* b = reinterpret_cast<float*>(net.data.data() + net.b_off[l]);
    for (std::size_t i = 0; i < layers[l].out; ++i) {
      b[i] = static_cast<float>(weights[layers[l].bias_offset + i]);
    }
  }
}

// Input rows regrouped into blocks of kRowBlock. Within a block each column
// touched by any row is listed once, in ascending order, with its (row,
// value) entries, so a weight row is loaded once per block.
inline constexpr std::size_t kRowBlock = 16;

struct BlockedColumns {
  std::vector<std::size_t> block_cols;   // blocks + 1 offsets into cols
  std::vector<std::uint32_t> cols;
  std::vector<std::size_t> col_entries;  // cols + 1 offsets into rows/values
  std::vector<std::uint32_t> rows;       // row within the block
  std::vector<float> values;
};

inline BlockedColumns block_columns(const SparseRowsView& in) {
  BlockedColumns out;
  const std::size_t n = in.rows();
  std::uint32_t width = 0;
  for (std::uint32_t c : in.columns) width = std::max(width, c + 1);
  std::vector<std::uint32_t> count(width);
  std::vector<std::uint32_t> fill(width);
  out.block_cols.push_back(0);
  out.col_entries.push_back(0);
  for (std::size_t r0 = 0; r0 < n; r0 += kRowBlock) {
    const std::size_t r1 = std::min(n, r0 + kRowBlock);
    const std::size_t first = in.row_offsets[r0];
    const std::size_t last = in.row_offsets[r1];
    for (std::size_t k = first; k < last; ++k) ++count[in.columns[k]];
    const std::size_t base = out.rows.size();
    std::size_t pos = base;
    for (std::uint32_t c = 0; c < width; ++c) {
      if (count[c] == 0) continue;
      out.cols.push_back(c);
      fill[c] = static_cast<std::uint32_t>(pos - base);
      pos += count[c];
      out.col_entries.push_back(pos);
      count[c] = 0;
    }
    out.rows.resize(pos);
    out.values.resize(pos);
    // Rows are visited in order, so each column's entries stay row-sorted.
    for (std::size_t r = r0; r < r1; ++r) {
      for (std::uint32_t k = in.row_offsets[r]; k < in.row_offsets[r + 1]; ++k) {
        const std::size_t at = base + fill[in.columns[k]]++;
        out.rows[at] = static_cast<std::uint32_t>(r - r0);
        out.values[at] = static_cast<float>(in.values[k]);
      }
    }
    out.block_cols.push_back(out.cols.size());
  }
  return out;
}

// acc[r * stride + v] += value * W[col, v] for output vectors [v0, v0 + NV).
// Each row still sums its columns in ascending order.
template <std::size_t NV>
inline void block_chunk(const BlockedColumns& bc, std::size_t block, const f32x8* w,
                        std::size_t stride, std::size_t v0, f32x8* acc) {
  for (std::size_t c = bc.block_cols[block]; c < bc.block_cols[block + 1]; ++c) {
    const f32x8* row = w + static_cast<std::size_t>(bc.cols[c]) * stride + v0;
    f32x8 wv[NV];
    for (std::size_t v = 0; v < NV; ++v) wv[v] = row[v];
    for (std::size_t e = bc.col_entries[c]; e < bc.col_entries[c + 1]; ++e) {
      f32x8* z = acc + static_cast<std::size_t>(bc.rows[e]) * stride + v0;
      const float a = bc.values[e];
      for (std::size_t v = 0; v < NV; ++v) z[v] = madd(a, wv[v], z[v]);
    }
  }
}

inline void block_first_layer(const BlockedColumns& bc, std::size_t block, const f32x8* w,
                              std::size_t stride, f32x8* acc) {
  constexpr std::size_t kChunk = 8;
  std::size_t v = 0;
  for (; v + kChunk <= stride; v += kChunk) block_chunk<kChunk>(bc, block, w, stride, v, acc);
  switch (stride - v) {
    case 0: break;
    case 1: block_chunk<1>(bc, block, w, stride, v, acc); break;
    case 2: block_chunk<2>(bc, block, w, stride, v, acc); break;
    case 3: block_chunk<3>(bc, block, w, stride, v, acc); break;
    case 4: block_chunk<4>(bc, block, w, stride, v, acc); break;
    case 5: block_chunk<5>(bc, block, w, stride, v, acc); break;
    case 6: block_chunk<6>(bc, block, w, stride, v, acc); break;
    case 7: block_chunk<7>(bc, block, w, stride, v, acc); break;
  }
}

// out[r, v0..v0+NV) += sum_j in[r, j] * W[j, v0..v0+NV) for `rows` rows whose
// activations sit `in_ld` floats apart. No zero skipping: after ReLU the
// branch is unpredictable and costs more than the multiply-adds.
template <std::size_t NV>
inline void dense_chunk(const float* in, std::size_t in_ld, std::size_t n_in, std::size_t rows,
                        const f32x8* w, std::size_t stride, std::size_t v0, f32x8* acc) {
  for (std::size_t j = 0; j < n_in; ++j) {
    const f32x8* row = w + j * stride + v0;
    f32x8 wv[NV];
    for (std::size_t v = 0; v < NV; ++v) wv[v] = row[v];
    for (std::size_t r = 0; r < rows; ++r) {
      const float a = in[r * in_ld + j];
      f32x8* z = acc + r * stride + v0;
      for (std::size_t v = 0; v < NV; ++v) z[v] = madd(a, wv[v], z[v]);
    }
  }
}

inline void dense_block(const float* in, std::size_t in_ld, std::size_t n_in, std::size_t rows,
                        const f32x8* w, std::size_t stride, f32x8* acc) {
  constexpr std::size_t kChunk = 8;
  std::size_t v = 0;
  for (; v + kChunk <= stride; v += kChunk) {
    dense_chunk<kChunk>(in, in_ld, n_in, rows, w, stride, v, acc);
  }
  switch (stride - v) {
    case 0: break;
    case 1: dense_chunk<1>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 2: dense_chunk<2>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 3: dense_chunk<3>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 4: dense_chunk<4>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 5: dense_chunk<5>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 6: dense_chunk<6>(in, in_ld, n_in, rows, w, stride, v, acc); break;
    case 7: dense_chunk<7>(in, in_ld, n_in, rows, w, stride, v, acc); break;
  }
}

// Scratch for one thread of Monte Carlo evaluation.
struct McScratch {
  std::vector<double> weights;
  PackedNet net;
  std::vector<f32x8> act_a, act_b;  // kRowBlock rows of one layer each
  std::vector<double> logits;
};

// Logits for `rows` rows of block `block`; row r ends up at
// s.act_a or s.act_b (returned) with the last layer's stride.
inline const f32x8* forward_block(const PackedNet& net, const BlockedColumns& bc,
                                  std::size_t block, std::size_t rows, McScratch& s) {
  const std::size_t L = net.in.size();
  std::vector<f32x8>* cur = &s.act_a;
  std::vector<f32x8>* next = &s.act_b;
  auto init_bias = [&](std::vector<f32x8>& acc, std::size_t l) {
    const std::size_t stride = net.stride[l];
    acc.resize(kRowBlock * stride);
    const f32x8* bias = net.data.data() + net.b_off[l];
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias, bias + stride, acc.begin() + static_cast<std::ptrdiff_t>(r * stride));
    }
  };
  init_bias(*cur, 0);
  block_first_layer(bc, block, net.data.data() + net.w_off[0], net.stride[0], cur->data());
  for (std::size_t l = 1; l < L; ++l) {
    const f32x8 zero{};
    for (std::size_t k = 0; k < rows * net.stride[l - 1]; ++k) {
      f32x8& v = (*cur)[k];
      v = v > zero ? v : zero;
    }
    init_bias(*next, l);
    dense_block(reinterpret_cast<const float*>(cur->data()), net.stride[l - 1] * kLanes,
                net.in[l], rows, net.data.data() + net.w_off[l], net.stride[l], next->data());
    std::swap(cur, next);
  }
  return cur->data();
}

// Draws one whole-network sample and returns (mean bounded xe, mean 0-1)
// over every row of `sweep.inputs`.
inline void evaluate_one_sample(const McSweep& sweep, const BlockedColumns& bc, std::size_t s,
                                McScratch& scratch) {
  const std::size_t n_params = sweep.mu.size();
  std::vector<double>& weights = scratch.weights;
  weights.resize(n_params);
  fill_standard_normal(sweep.sample_seeds[s], weights);
  for (std::size_t k = 0; k < n_params; ++k) {
    weights[k] = std::fma(sweep.sigma[k], weights[k], sweep.mu[k]);
  }
  const PackedNet& net = scratch.net;
  pack_weights(sweep.layers, weights, scratch.net);

  const std::size_t rows = sweep.inputs.rows();
  const std::size_t classes = sweep.layers.back().out;
  const std::size_t out_ld = net.stride.back() * kLanes;
  scratch.logits.resize(classes);
  double xe_sum = 0.0;
  std::size_t errors = 0;
  for (std::size_t block = 0, r0 = 0; r0 < rows; ++block, r0 += kRowBlock) {
    const std::size_t count = std::min(kRowBlock, rows - r0);
    const float* z = reinterpret_cast<const float*>(forward_block(net, bc, block, count, scratch));
    for (std::size_t r = 0; r < count; ++r) {
      std::copy(z + r * out_ld, z + r * out_ld + classes, scratch.logits.begin());
      const std::uint8_t label = sweep.labels[r0 + r];
      xe_sum += bounded_xe(scratch.logits.data(), classes, label, sweep.p_min, nullptr);
      errors += static_cast<std::size_t>(zero_one(scratch.logits.data(), classes, label));
    }
  }
  sweep.mean_xe[s] = xe_sum / static_cast<double>(rows);
  sweep.mean_01[s] = static_cast<double>(errors) / static_cast<double>(rows);
}

}  // namespace pbcert::detail

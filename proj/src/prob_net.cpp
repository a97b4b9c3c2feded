#include "pbcert/prob_net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "kernel_detail.hpp"

namespace pbcert {

std::string_view to_string(LossKind kind) {
  return kind == LossKind::BoundedXE ? "bounded_xe" : "zero_one";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "bounded_xe" || name == "xe") return LossKind::BoundedXE;
  if (name == "zero_one" || name == "01") return LossKind::ZeroOne;
  throw std::invalid_argument("unknown loss kind: " + std::string(name));
}

Architecture::Architecture(std::vector<std::size_t> layer_sizes, Activation activation)
    : sizes_(std::move(layer_sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw std::invalid_argument("Architecture: needs at least two layer sizes");
  for (std::size_t s : sizes_) {
    if (s == 0) throw std::invalid_argument("Architecture: layer sizes must be positive");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    LayerDims dims;
    dims.in = sizes_[l];
    dims.out = sizes_[l + 1];
    dims.weight_offset = offset;
    offset += dims.in * dims.out;
    dims.bias_offset = offset;
    offset += dims.out;
    layers_.push_back(dims);
  }
  num_params_ = offset;
}

double softplus(double rho) {
  if (rho > 30.0) return rho + std::log1p(std::exp(-rho));
  return std::log1p(std::exp(rho));
}

double inverse_softplus(double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("inverse_softplus: sigma must be > 0");
  if (sigma > 30.0) return sigma + std::log(-std::expm1(-sigma));
  return std::log(std::expm1(sigma));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

GaussianPosterior::GaussianPosterior(Architecture arch, double sigma0, std::uint64_t seed)
    : arch_(std::move(arch)), prior_sigma_(sigma0), seed_(seed) {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("GaussianPosterior: sigma0 must be > 0");
}

GaussianPosterior GaussianPosterior::init_prior(const Architecture& arch, double sigma0,
                                                std::uint64_t seed) {
  GaussianPosterior post(arch, sigma0, seed);
  post.prior_mu_.assign(arch.num_params(), 0.0);
  std::mt19937_64 rng(seed);
  for (const LayerDims& layer : arch.layers()) {
    std::normal_distribution<double> normal(0.0, std::sqrt(1.0 / static_cast<double>(layer.in)));
    for (std::size_t k = 0; k < layer.in * layer.out; ++k) {
      post.prior_mu_[layer.weight_offset + k] = normal(rng);
    }
  }
  post.mu_ = post.prior_mu_;
  post.rho_.assign(arch.num_params(), inverse_softplus(sigma0));
  return post;
}

GaussianPosterior GaussianPosterior::restore(const Architecture& arch, double sigma0,
                                             std::uint64_t seed, std::vector<double> mu,
                                             std::vector<double> rho,
                                             std::vector<double> prior_mu) {
  const std::size_t n = arch.num_params();
  if (mu.size() != n || rho.size() != n || prior_mu.size() != n) {
    throw std::invalid_argument("GaussianPosterior::restore: tensor sizes do not match architecture");
  }
  GaussianPosterior post(arch, sigma0, seed);
  post.mu_ = std::move(mu);
  post.rho_ = std::move(rho);
  post.prior_mu_ = std::move(prior_mu);
  return post;
}

std::vector<double> GaussianPosterior::sigma() const {
  std::vector<double> out(rho_.size());
  for (std::size_t k = 0; k < rho_.size(); ++k) out[k] = softplus(rho_[k]);
  return out;
}

std::vector<double> draw_noise(const Architecture& arch, std::uint64_t seed) {
  std::vector<double> noise(arch.num_params());
  detail::fill_standard_normal(seed, noise);
  return noise;
}

std::vector<double> sample_weights(const GaussianPosterior& post, std::span<const double> noise) {
  const auto mu = post.mu();
  const auto rho = post.rho();
  if (noise.size() != mu.size()) {
    throw std::invalid_argument("sample_weights: noise needs one entry per parameter");
  }
  std::vector<double> w(mu.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::fma(softplus(rho[k]), noise[k], mu[k]);
  return w;
}

namespace {

void affine(Exec exec, std::span<const double> in, std::span<const double> weights,
            std::span<const double> bias, std::size_t batch, std::size_t n_in, std::size_t n_out,
            std::span<double> out) {
  if (exec == Exec::parallel) {
    kernels::omp::affine_forward(in, weights, bias, batch, n_in, n_out, out);
  } else {
    kernels::serial::affine_forward(in, weights, bias, batch, n_in, n_out, out);
  }
}

// Pre-activations of every layer for a batch; entry l has batch x out_l values.
std::vector<std::vector<double>> forward_all(const Architecture& arch,
                                             std::span<const double> weights,
                                             std::span<const double> inputs, std::size_t batch,
                                             Exec exec) {
  const auto layers = arch.layers();
  std::vector<std::vector<double>> pre(layers.size());
  std::vector<double> act;
  std::span<const double> cur = inputs;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const LayerDims& d = layers[l];
    pre[l].resize(batch * d.out);
    affine(exec, cur, weights.subspan(d.weight_offset, d.in * d.out),
           weights.subspan(d.bias_offset, d.out), batch, d.in, d.out, pre[l]);
    if (l + 1 < layers.size()) {
      act = pre[l];
      detail::relu_inplace(act);
      cur = act;
    }
  }
  return pre;
}

}  // namespace

std::vector<double> forward(const Architecture& arch, std::span<const double> weights,
                            std::span<const double> inputs, std::size_t batch, Exec exec) {
  if (weights.size() != arch.num_params()) {
    throw std::invalid_argument("forward: weight vector does not match architecture");
  }
  if (inputs.size() != batch * arch.input_dim()) {
    throw std::invalid_argument("forward: input size does not match batch x input_dim");
  }
  auto pre = forward_all(arch, weights, inputs, batch, exec);
  return std::move(pre.back());
}

std::vector<double> sample_forward(const GaussianPosterior& post, std::span<const double> input,
                                   std::span<const double> noise) {
  const auto weights = sample_weights(post, noise);
  return forward(post.arch(), weights, input, 1, Exec::serial);
}

double bounded_xe(std::span<const double> logits, std::size_t label, double p_min) {
  if (label >= logits.size()) throw std::invalid_argument("bounded_xe: label out of range");
  if (!(p_min > 0.0 && p_min < 1.0 / static_cast<double>(logits.size()))) {
    throw std::invalid_argument("bounded_xe: p_min must lie in (0, 1/classes)");
  }
  return detail::bounded_xe(logits.data(), logits.size(), label, p_min, nullptr);
}

int zero_one(std::span<const double> logits, std::size_t label) {
  return detail::zero_one(logits.data(), logits.size(), label);
}

double gaussian_kl(const GaussianPosterior& post) {
  const double s0 = post.prior_sigma();
  const double inv_two_var0 = 1.0 / (2.0 * s0 * s0);
  const auto mu = post.mu();
  const auto rho = post.rho();
  const auto mu0 = post.prior_mu();
  double total = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double s = softplus(rho[k]);
    const double diff = mu[k] - mu0[k];
    total += std::log(s0 / s) + (s * s + diff * diff) * inv_two_var0 - 0.5;
  }
  return total > 0.0 ? total : 0.0;
}

ParamGradient gaussian_kl_gradient(const GaussianPosterior& post) {
  const double var0 = post.prior_sigma() * post.prior_sigma();
  const auto mu = post.mu();
  const auto rho = post.rho();
  const auto mu0 = post.prior_mu();
  ParamGradient g{std::vector<double>(mu.size()), std::vector<double>(mu.size())};
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double s = softplus(rho[k]);
    g.mu[k] = (mu[k] - mu0[k]) / var0;
    g.rho[k] = (s / var0 - 1.0 / s) * sigmoid(rho[k]);
  }
  return g;
}

BackwardResult backward(const GaussianPosterior& post, const BatchView& batch,
                        std::span<const double> noise, LossKind loss_kind, double p_min,
                        Exec exec) {
  if (loss_kind != LossKind::BoundedXE) {
    throw std::invalid_argument("backward: only the bounded cross-entropy is differentiable");
  }
  const Architecture& arch = post.arch();
  const std::size_t n = batch.size();
  if (n == 0) throw std::invalid_argument("backward: empty batch");
  if (batch.inputs.size() != n * arch.input_dim()) {
    throw std::invalid_argument("backward: input size does not match batch x input_dim");
  }
  if (noise.size() != arch.num_params()) {
    throw std::invalid_argument("backward: noise needs one entry per parameter");
  }
  const std::size_t classes = arch.num_classes();
  for (std::uint8_t label : batch.labels) {
    if (label >= classes) throw std::invalid_argument("backward: label out of range");
  }

  const auto weights = sample_weights(post, noise);
  const auto pre = forward_all(arch, weights, batch.inputs, n, exec);
  const auto layers = arch.layers();

  BackwardResult result;
  // d(mean loss)/d(logits)
  std::vector<double> delta(n * classes);
  double loss_sum = 0.0;
  std::size_t errors = 0;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double* logits = pre.back().data() + b * classes;
    double* g = delta.data() + b * classes;
    loss_sum += detail::bounded_xe(logits, classes, batch.labels[b], p_min, g);
    errors += static_cast<std::size_t>(detail::zero_one(logits, classes, batch.labels[b]));
    for (std::size_t c = 0; c < classes; ++c) g[c] *= inv_n;
  }
  result.emp_loss = loss_sum * inv_n;
  result.emp_zero_one = static_cast<double>(errors) * inv_n;

  std::vector<double> d_weights(arch.num_params(), 0.0);
  std::vector<double> act;
  std::vector<double> d_act;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const LayerDims& d = layers[l];
    std::span<const double> in = batch.inputs;
    if (l > 0) {
      act = pre[l - 1];
      detail::relu_inplace(act);
      in = act;
    }
    std::span<double> dw{d_weights.data() + d.weight_offset, d.in * d.out};
    std::span<double> db{d_weights.data() + d.bias_offset, d.out};
    const std::span<const double> w{weights.data() + d.weight_offset, d.in * d.out};
    if (exec == Exec::parallel) {
      kernels::omp::affine_backward_params(in, delta, n, d.in, d.out, dw, db);
    } else {
      kernels::serial::affine_backward_params(in, delta, n, d.in, d.out, dw, db);
    }
    if (l == 0) break;
    d_act.assign(n * d.in, 0.0);
    if (exec == Exec::parallel) {
      kernels::omp::affine_backward_input(delta, w, n, d.in, d.out, d_act);
    } else {
      kernels::serial::affine_backward_input(delta, w, n, d.in, d.out, d_act);
    }
    const auto& below = pre[l - 1];
    for (std::size_t k = 0; k < d_act.size(); ++k) {
      if (!(below[k] > 0.0)) d_act[k] = 0.0;
    }
    delta.swap(d_act);
  }

  const auto rho = post.rho();
  result.loss_grad.mu = d_weights;
  result.loss_grad.rho.resize(d_weights.size());
  for (std::size_t k = 0; k < d_weights.size(); ++k) {
    result.loss_grad.rho[k] = d_weights[k] * noise[k] * sigmoid(rho[k]);
  }
  result.kl = gaussian_kl(post);
  result.kl_grad = gaussian_kl_gradient(post);
  return result;
}

}  // namespace pbcert

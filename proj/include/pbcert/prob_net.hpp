#pragma once

// Multilayer perceptron with a diagonal Gaussian posterior over every weight
// and bias, and a frozen Gaussian prior of the same shape.
//
// Parameters live in one flat vector. For each layer the weight block comes
// first (input-major, see kernels.hpp) followed by the bias block. The same
// order is used for mu, rho, the prior means and the noise draws.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pbcert/kernels.hpp"

namespace pbcert {

enum class Activation { relu };
enum class LossKind { BoundedXE, ZeroOne };

std::string_view to_string(LossKind kind);      // "bounded_xe" / "zero_one"
LossKind parse_loss_kind(std::string_view name);

class Architecture {
 public:
  explicit Architecture(std::vector<std::size_t> layer_sizes,
                        Activation activation = Activation::relu);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  std::span<const LayerDims> layers() const { return layers_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t num_classes() const { return sizes_.back(); }
  std::size_t num_params() const { return num_params_; }

  friend bool operator==(const Architecture& a, const Architecture& b) {
    return a.sizes_ == b.sizes_ && a.activation_ == b.activation_;
  }

 private:
  std::vector<std::size_t> sizes_;
  Activation activation_;
  std::vector<LayerDims> layers_;
  std::size_t num_params_ = 0;
};

// sigma = ln(1 + e^rho).
double softplus(double rho);
double inverse_softplus(double sigma);
double sigmoid(double x);

class GaussianPosterior {
 public:
  // Prior means ~ N(0, 1/n_in) for weights, 0 for biases; posterior = prior.
  static GaussianPosterior init_prior(const Architecture& arch, double sigma0,
                                      std::uint64_t seed);

  // Reassembles a posterior from stored tensors (checkpoint loading).
  static GaussianPosterior restore(const Architecture& arch, double sigma0, std::uint64_t seed,
                                   std::vector<double> mu, std::vector<double> rho,
                                   std::vector<double> prior_mu);

  const Architecture& arch() const { return arch_; }
  std::uint64_t seed() const { return seed_; }
  double prior_sigma() const { return prior_sigma_; }

  std::span<double> mu() { return mu_; }
  std::span<double> rho() { return rho_; }
  std::span<const double> mu() const { return mu_; }
  std::span<const double> rho() const { return rho_; }
  std::span<const double> prior_mu() const { return prior_mu_; }

  std::vector<double> sigma() const;

 private:
  GaussianPosterior(Architecture arch, double sigma0, std::uint64_t seed);

  Architecture arch_;
  double prior_sigma_;
  std::uint64_t seed_;
  std::vector<double> mu_;
  std::vector<double> rho_;
  std::vector<double> prior_mu_;
};

// A contiguous batch of dense inputs (rows x input_dim) and their labels.
struct BatchView {
  std::span<const double> inputs;
  std::span<const std::uint8_t> labels;
  std::size_t size() const { return labels.size(); }
};

// Standard normal noise, one draw per parameter, from `seed`.
std::vector<double> draw_noise(const Architecture& arch, std::uint64_t seed);

// w = mu + sigma * noise.
std::vector<double> sample_weights(const GaussianPosterior& post, std::span<const double> noise);

// Logits for a batch of inputs under fixed weights.
std::vector<double> forward(const Architecture& arch, std::span<const double> weights,
                            std::span<const double> inputs, std::size_t batch,
                            Exec exec = Exec::parallel);

// Logits for one input under the weights mu + sigma * noise.
std::vector<double> sample_forward(const GaussianPosterior& post, std::span<const double> input,
                                   std::span<const double> noise);

// ln(1/max(p_y, p_min)) / ln(1/p_min), p_y the softmax probability of `label`.
double bounded_xe(std::span<const double> logits, std::size_t label, double p_min);

// 0 when argmax(logits) == label, ties to the lowest index.
int zero_one(std::span<const double> logits, std::size_t label);

// KL(Q || Q0) in nats.
double gaussian_kl(const GaussianPosterior& post);

struct ParamGradient {
  std::vector<double> mu;
  std::vector<double> rho;
};

ParamGradient gaussian_kl_gradient(const GaussianPosterior& post);

struct BackwardResult {
  double emp_loss = 0.0;       // batch mean bounded xe
  double emp_zero_one = 0.0;   // batch mean 0-1 loss under the same weights
  ParamGradient loss_grad;     // of emp_loss, pathwise through the noise
  double kl = 0.0;
  ParamGradient kl_grad;
};

// Batch-mean bounded cross-entropy and its reparameterized gradient for one
// shared noise draw. Only LossKind::BoundedXE is differentiable.
BackwardResult backward(const GaussianPosterior& post, const BatchView& batch,
                        std::span<const double> noise, LossKind loss_kind, double p_min,
                        Exec exec = Exec::parallel);

}  // namespace pbcert

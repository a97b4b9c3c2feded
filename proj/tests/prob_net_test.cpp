#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pbcert/prob_net.hpp"

using namespace pbcert;

namespace {

// 2-4-3 network moved away from its prior so every gradient term is active.
struct Toy {
  Architecture arch{{2, 4, 3}};
  GaussianPosterior post = GaussianPosterior::init_prior(arch, 0.3, 11);
  std::vector<double> inputs{0.9, -0.4, -0.7, 0.8, 0.2, 0.5, 1.1, 0.3, -0.6, -0.9};
  std::vector<std::uint8_t> labels{0, 1, 2, 1, 0};
  std::vector<double> noise;

  Toy() {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n;
    for (double& m : post.mu()) m += 0.4 * n(rng);
    for (double& r : post.rho()) r += 0.3 * n(rng);
    noise = draw_noise(arch, 123);
  }
  BatchView batch() const { return {inputs, labels}; }
};

double batch_loss(const GaussianPosterior& post, const Toy& toy) {
  const auto w = sample_weights(post, toy.noise);
  const auto logits = forward(post.arch(), w, toy.inputs, toy.labels.size(), Exec::serial);
  double total = 0.0;
  for (std::size_t b = 0; b < toy.labels.size(); ++b) {
    total += bounded_xe(std::span<const double>(logits.data() + 3 * b, 3), toy.labels[b], 1e-4);
  }
  return total / static_cast<double>(toy.labels.size());
}

// Smallest |hidden pre-activation| of the toy batch; finite differences need
// it well away from the ReLU kink.
double hidden_margin(const Toy& toy) {
  const auto w = sample_weights(toy.post, toy.noise);
  const LayerDims& d = toy.arch.layers()[0];
  double margin = 1e300;
  for (std::size_t b = 0; b < toy.labels.size(); ++b) {
    for (std::size_t i = 0; i < d.out; ++i) {
      double z = w[d.bias_offset + i];
      for (std::size_t j = 0; j < d.in; ++j) z += toy.inputs[b * 2 + j] * w[d.weight_offset + j * d.out + i];
      margin = std::min(margin, std::abs(z));
    }
  }
  return margin;
}

}  // namespace

TEST(Architecture, Layout) {
  const Architecture arch({784, 100, 10});
  EXPECT_EQ(arch.num_params(), 784u * 100 + 100 + 100 * 10 + 10);
  ASSERT_EQ(arch.layers().size(), 2u);
  EXPECT_EQ(arch.layers()[0].bias_offset, 78400u);
  EXPECT_EQ(arch.layers()[1].weight_offset, 78500u);
  EXPECT_THROW(Architecture({10}), std::invalid_argument);
  EXPECT_THROW(Architecture({10, 0, 2}), std::invalid_argument);
}

TEST(Softplus, InverseAndSigmoid) {
  for (double s : {1e-4, 0.04, 1.0, 5.0, 40.0}) EXPECT_NEAR(softplus(inverse_softplus(s)), s, 1e-12 * (1 + s));
  EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(-50.0), std::exp(-50.0), 1e-30);
  EXPECT_THROW(inverse_softplus(0.0), std::invalid_argument);
}

TEST(InitPrior, PosteriorEqualsPrior) {
  const Architecture arch({784, 100, 10});
  const auto post = GaussianPosterior::init_prior(arch, 0.04, 1);
  EXPECT_EQ(gaussian_kl(post), 0.0);
  for (double s : post.sigma()) EXPECT_NEAR(s, 0.04, 1e-15);
  for (std::size_t k = 0; k < arch.num_params(); ++k) EXPECT_EQ(post.mu()[k], post.prior_mu()[k]);
  const LayerDims& d = arch.layers()[0];
  for (std::size_t i = 0; i < d.out; ++i) EXPECT_EQ(post.prior_mu()[d.bias_offset + i], 0.0);
  EXPECT_THROW(GaussianPosterior::init_prior(arch, 0.0, 1), std::invalid_argument);
}

TEST(InitPrior, DeterministicPerSeed) {
  const Architecture arch({20, 8, 3});
  const auto a = GaussianPosterior::init_prior(arch, 0.04, 9);
  const auto b = GaussianPosterior::init_prior(arch, 0.04, 9);
  const auto c = GaussianPosterior::init_prior(arch, 0.04, 10);
  EXPECT_TRUE(std::equal(a.mu().begin(), a.mu().end(), b.mu().begin()));
  EXPECT_TRUE(std::equal(a.rho().begin(), a.rho().end(), b.rho().begin()));
  EXPECT_FALSE(std::equal(a.mu().begin(), a.mu().end(), c.mu().begin()));
}

TEST(InitPrior, WeightVarianceIsOneOverFanIn) {
  const Architecture arch({784, 600, 10});
  const auto post = GaussianPosterior::init_prior(arch, 0.04, 3);
  const LayerDims& d = arch.layers()[0];
  double sum = 0.0, sq = 0.0;
  const std::size_t n = d.in * d.out;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = post.prior_mu()[d.weight_offset + k];
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  EXPECT_NEAR(var * 784.0, 1.0, 0.1);
}

TEST(SampleForward, ZeroNoiseIsMeanNetwork) {
  const Architecture arch({5, 4, 3});
  auto post = GaussianPosterior::init_prior(arch, 0.5, 2);
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5};
  const std::vector<double> zero(arch.num_params(), 0.0);
  const auto a = sample_forward(post, x, zero);
  const auto b = forward(arch, post.mu(), x, 1, Exec::serial);
  EXPECT_EQ(a, b);
  const auto noise = draw_noise(arch, 4);
  EXPECT_EQ(sample_forward(post, x, noise), sample_forward(post, x, noise));
  EXPECT_NE(sample_forward(post, x, noise), a);
  EXPECT_THROW(sample_forward(post, x, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(SampleForward, IdentityNetwork) {
  const Architecture arch({3, 3});
  std::vector<double> mu(arch.num_params(), 0.0);
  for (std::size_t i = 0; i < 3; ++i) mu[i * 3 + i] = 1.0;
  const auto post = GaussianPosterior::restore(arch, 1.0, 0, mu,
                                               std::vector<double>(arch.num_params(), -40.0),
                                               std::vector<double>(arch.num_params(), 0.0));
  const std::vector<double> x{0.25, -1.5, 3.0};
  const auto out = sample_forward(post, x, draw_noise(arch, 1));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], x[i], 1e-12);
}

TEST(BoundedXe, Examples) {
  EXPECT_NEAR(bounded_xe(std::vector<double>{100.0, 0.0, 0.0}, 0, 1e-4), 0.0, 1e-15);
  EXPECT_EQ(bounded_xe(std::vector<double>{0.0, 50.0, 0.0}, 0, 1e-4), 1.0);
  EXPECT_NEAR(bounded_xe(std::vector<double>{0.0, 0.0}, 1, 1e-4), std::log(2.0) / std::log(1e4),
              1e-15);
  EXPECT_NEAR(bounded_xe(std::vector<double>{0.0, 0.0}, 1, 1e-4), 0.07525, 1e-5);
}

TEST(BoundedXe, RangeAndErrors) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 10.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> logits(10);
    for (double& l : logits) l = n(rng);
    const double v = bounded_xe(logits, t % 10, 1e-4);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(bounded_xe(std::vector<double>{0.0, 0.0}, 2, 1e-4), std::invalid_argument);
  EXPECT_THROW(bounded_xe(std::vector<double>{0.0, 0.0}, 0, 0.5), std::invalid_argument);
}

TEST(ZeroOne, TiesGoToLowestIndex) {
  EXPECT_EQ(zero_one(std::vector<double>{0.1, 0.9, 0.2}, 1), 0);
  EXPECT_EQ(zero_one(std::vector<double>{0.1, 0.9, 0.2}, 2), 1);
  EXPECT_EQ(zero_one(std::vector<double>{0.7, 0.1, 0.7}, 2), 1);
  EXPECT_EQ(zero_one(std::vector<double>{0.7, 0.1, 0.7}, 0), 0);
}

TEST(GaussianKl, SingleWeightExamples) {
  const Architecture arch({1, 1});  // one weight, one bias
  const double r1 = inverse_softplus(1.0);
  const auto a = GaussianPosterior::restore(arch, 1.0, 0, {1.0, 0.0}, {r1, r1}, {0.0, 0.0});
  EXPECT_NEAR(gaussian_kl(a), 0.5, 1e-14);
  const ParamGradient g = gaussian_kl_gradient(a);
  EXPECT_NEAR(g.mu[0], 1.0, 1e-14);
  EXPECT_NEAR(g.mu[1], 0.0, 1e-14);
  EXPECT_NEAR(g.rho[0], 0.0, 1e-14);

  const double re = inverse_softplus(std::exp(-1.0));
  const auto b = GaussianPosterior::restore(arch, 1.0, 0, {0.3, 0.0}, {re, r1}, {0.3, 0.0});
  EXPECT_NEAR(gaussian_kl(b), 0.5 + 1.0 / (2.0 * std::exp(2.0)), 1e-13);
  EXPECT_NEAR(gaussian_kl(b), 0.5677, 1e-4);
}

TEST(GaussianKl, GradientMatchesFiniteDifferences) {
  Toy toy;
  const ParamGradient g = gaussian_kl_gradient(toy.post);
  const double h = 1e-6;
  for (std::size_t k = 0; k < toy.arch.num_params(); ++k) {
    GaussianPosterior p = toy.post;
    const double dmu = oracle::central_diff(
        [&](double x) { p.mu()[k] = x; return gaussian_kl(p); }, toy.post.mu()[k], h);
    p = toy.post;
    const double drho = oracle::central_diff(
        [&](double x) { p.rho()[k] = x; return gaussian_kl(p); }, toy.post.rho()[k], h);
    EXPECT_LT(oracle::rel_err(g.mu[k], dmu, 1e-6), 1e-5) << k;
    EXPECT_LT(oracle::rel_err(g.rho[k], drho, 1e-6), 1e-5) << k;
  }
}

TEST(GaussianKl, NonnegativeAndZeroOnlyAtPrior) {
  Toy toy;
  EXPECT_GT(gaussian_kl(toy.post), 0.0);
}

TEST(Backward, RejectsZeroOne) {
  Toy toy;
  EXPECT_THROW(backward(toy.post, toy.batch(), toy.noise, LossKind::ZeroOne, 1e-4),
               std::invalid_argument);
}

TEST(Backward, GradientsMatchFiniteDifferences) {
  Toy toy;
  ASSERT_GT(hidden_margin(toy), 1e-3);
  const BackwardResult bw = backward(toy.post, toy.batch(), toy.noise, LossKind::BoundedXE, 1e-4,
                                     Exec::serial);
  EXPECT_NEAR(bw.emp_loss, batch_loss(toy.post, toy), 1e-14);
  const double h = 1e-6;
  for (std::size_t k = 0; k < toy.arch.num_params(); ++k) {
    GaussianPosterior p = toy.post;
    const double dmu = oracle::central_diff(
        [&](double x) { p.mu()[k] = x; return batch_loss(p, toy); }, toy.post.mu()[k], h);
    p = toy.post;
    const double drho = oracle::central_diff(
        [&](double x) { p.rho()[k] = x; return batch_loss(p, toy); }, toy.post.rho()[k], h);
    EXPECT_LT(oracle::rel_err(bw.loss_grad.mu[k], dmu, 1e-8), 1e-4) << "mu " << k;
    EXPECT_LT(oracle::rel_err(bw.loss_grad.rho[k], drho, 1e-8), 1e-4) << "rho " << k;
  }
}

TEST(Backward, SerialAndParallelAgree) {
  Toy toy;
  const auto a = backward(toy.post, toy.batch(), toy.noise, LossKind::BoundedXE, 1e-4, Exec::serial);
  const auto b = backward(toy.post, toy.batch(), toy.noise, LossKind::BoundedXE, 1e-4, Exec::parallel);
  EXPECT_EQ(a.emp_loss, b.emp_loss);
  EXPECT_EQ(a.loss_grad.mu, b.loss_grad.mu);
  EXPECT_EQ(a.loss_grad.rho, b.loss_grad.rho);
}

TEST(Backward, ZeroOneUsesSameWeights) {
  Toy toy;
  const auto bw = backward(toy.post, toy.batch(), toy.noise, LossKind::BoundedXE, 1e-4);
  const auto w = sample_weights(toy.post, toy.noise);
  const auto logits = forward(toy.arch, w, toy.inputs, 5, Exec::serial);
  double errors = 0.0;
  for (std::size_t b = 0; b < 5; ++b) {
    errors += zero_one(std::span<const double>(logits.data() + 3 * b, 3), toy.labels[b]);
  }
  EXPECT_DOUBLE_EQ(bw.emp_zero_one, errors / 5.0);
}

// The mean pathwise gradient over many draws estimates the gradient of the
// noise-averaged loss; the latter is checked by finite differences on an
// independent set of draws (common draws for the +h and -h evaluations).
TEST(Backward, PathwiseGradientIsUnbiased) {
  Toy toy;
  const int draws = 4000;
  const std::size_t P = toy.arch.num_params();
  std::vector<double> g_mean(P, 0.0), g_sq(P, 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto noise = draw_noise(toy.arch, 1000 + d);
    const auto bw = backward(toy.post, toy.batch(), noise, LossKind::BoundedXE, 1e-4);
    for (std::size_t k = 0; k < P; ++k) {
      g_mean[k] += bw.loss_grad.mu[k];
      g_sq[k] += bw.loss_grad.mu[k] * bw.loss_grad.mu[k];
    }
  }
  std::vector<std::vector<double>> fd_noise;
  for (int d = 0; d < draws; ++d) fd_noise.push_back(draw_noise(toy.arch, 900000 + d));
  const double h = 1e-4;
  int checked = 0;
  for (std::size_t k = 0; k < P; ++k) {
    g_mean[k] /= draws;
    const double se_g = std::sqrt(std::max(g_sq[k] / draws - g_mean[k] * g_mean[k], 0.0) / draws);
    std::vector<double> fd(draws);
    for (int d = 0; d < draws; ++d) {
      Toy probe = toy;
      probe.noise = fd_noise[d];
      probe.post.mu()[k] = toy.post.mu()[k] + h;
      const double up = batch_loss(probe.post, probe);
      probe.post.mu()[k] = toy.post.mu()[k] - h;
      const double down = batch_loss(probe.post, probe);
      fd[d] = (up - down) / (2 * h);
    }
    double m = 0.0, s = 0.0;
    for (double v : fd) m += v;
    m /= draws;
    for (double v : fd) s += (v - m) * (v - m);
    const double se_fd = std::sqrt(s / (draws - 1) / draws);
    EXPECT_LE(std::abs(g_mean[k] - m), 5.0 * std::hypot(se_g, se_fd) + 1e-6) << k;
    ++checked;
  }
  EXPECT_EQ(checked, static_cast<int>(P));
}

TEST(LossKindNames, RoundTrip) {
  EXPECT_EQ(parse_loss_kind("zero_one"), LossKind::ZeroOne);
  EXPECT_EQ(parse_loss_kind(to_string(LossKind::BoundedXE)), LossKind::BoundedXE);
  EXPECT_THROW(parse_loss_kind("hinge"), std::invalid_argument);
}

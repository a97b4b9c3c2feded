// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "pbcert/dataset.hpp"
#include "pbcert/kernels.hpp"
#include "pbcert/prob_net.hpp"
#include "pbcert/synth_digits.hpp"
#include "pbcert/trainer.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

template <auto Kernel>
void BM_AffineForward(benchmark::State& state) {
  const std::size_t batch = 250;
  const std::size_t n_in = 784;
  const auto n_out = static_cast<std::size_t>(state.range(0));
  const auto in = random_vector(batch * n_in, 1);
  const auto w = random_vector(n_in * n_out, 2);
  const auto b = random_vector(n_out, 3);
  std::vector<double> out(batch * n_out);
  for (auto _ : state) {
    Kernel(in, w, b, batch, n_in, n_out, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * n_in * n_out));
}

template <auto Kernel>
void BM_AffineBackwardParams(benchmark::State& state) {
  const std::size_t batch = 250;
  const std::size_t n_in = 784;
  const auto n_out = static_cast<std::size_t>(state.range(0));
  const auto in = random_vector(batch * n_in, 1);
  const auto g = random_vector(batch * n_out, 2);
  std::vector<double> dw(n_in * n_out);
  std::vector<double> db(n_out);
  for (auto _ : state) {
    Kernel(in, g, batch, n_in, n_out, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * batch * n_in * n_out));
}

template <pbcert::Exec E>
void BM_McSweep(benchmark::State& state) {
  const auto digits = pbcert::make_synth_digits(1000, 7);
  pbcert::Dataset data;
  data.rows = digits.count;
  data.dim = 784;
  data.labels = digits.labels;
  data.pixels.resize(digits.pixels.size());
  for (std::size_t i = 0; i < digits.pixels.size(); ++i) data.pixels[i] = digits.pixels[i] / 255.0;
  const pbcert::Architecture arch({784, 100, 10});
  const auto post = pbcert::GaussianPosterior::init_prior(arch, 0.04, 1);
  const auto samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    const auto est = pbcert::mc_empirical_risks(post, data, samples, 11, 1e-4, E);
    benchmark::DoNotOptimize(est.mean_01);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * samples * data.rows));
}

}  // namespace

BENCHMARK(BM_AffineForward<pbcert::kernels::serial::affine_forward>)->Arg(100)->Arg(600);
BENCHMARK(BM_AffineForward<pbcert::kernels::omp::affine_forward>)->Arg(100)->Arg(600);
BENCHMARK(BM_AffineBackwardParams<pbcert::kernels::serial::affine_backward_params>)->Arg(100)->Arg(600);
BENCHMARK(BM_AffineBackwardParams<pbcert::kernels::omp::affine_backward_params>)->Arg(100)->Arg(600);
BENCHMARK(BM_McSweep<pbcert::Exec::serial>)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McSweep<pbcert::Exec::parallel>)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();

// Writes procedurally generated 28x28 digits as MNIST-format IDX files.

#include <CLI11.hpp>

#include <iostream>

#include "pbcert/synth_digits.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic MNIST-format digit files"};
  std::string dir = ".";
  std::string prefix = "train";
  std::size_t count = 10000;
  std::uint64_t seed = 1;
  app.add_option("--out-dir", dir);
  app.add_option("--prefix", prefix);
  app.add_option("--count", count)->check(CLI::PositiveNumber);
  app.add_option("--seed", seed);
  CLI11_PARSE(app, argc, argv);

  const auto [images, labels] = pbcert::write_synth_digits(dir, prefix, count, seed);
  std::cout << images.string() << '\n' << labels.string() << '\n';
  return 0;
}

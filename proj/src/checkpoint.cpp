#include "pbcert/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace pbcert {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void write_array(std::ofstream& out, std::span<const double> values) {
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
}

std::vector<double> read_array(std::ifstream& in, std::size_t count, const char* name) {
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error(std::string("checkpoint: truncated ") + name + " array");
  return values;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const GaussianPosterior& post) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  char sigma[64];
  std::snprintf(sigma, sizeof sigma, "%.17g", post.prior_sigma());
  out << "pbcert-checkpoint " << kCheckpointVersion << '\n' << "arch ";
  const auto& sizes = post.arch().layer_sizes();
  for (std::size_t i = 0; i < sizes.size(); ++i) out << (i ? "," : "") << sizes[i];
  out << "\nactivation relu\nseed " << post.seed() << "\nsigma0 " << sigma << "\nn_params "
      << post.arch().num_params() << "\ndata\n";
  write_array(out, post.mu());
  write_array(out, post.rho());
  write_array(out, post.prior_mu());
  if (!out) throw std::runtime_error("error writing checkpoint " + path.string());
}

GaussianPosterior load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint not found: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != "pbcert-checkpoint " + std::to_string(kCheckpointVersion)) {
    throw std::runtime_error("checkpoint: bad magic/version line in " + path.string());
  }
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  double sigma0 = 0.0;
  std::size_t n_params = 0;
  bool saw_data = false;
  while (std::getline(in, line)) {
    if (line == "data") {
      saw_data = true;
      break;
    }
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "arch") {
      std::string list;
      fields >> list;
      std::istringstream items(list);
      std::string item;
      while (std::getline(items, item, ',')) sizes.push_back(std::stoul(item));
    } else if (key == "activation") {
      std::string act;
      fields >> act;
      if (act != "relu") throw std::runtime_error("checkpoint: unsupported activation " + act);
    } else if (key == "seed") {
      fields >> seed;
    } else if (key == "sigma0") {
      fields >> sigma0;
    } else if (key == "n_params") {
      fields >> n_params;
    } else {
      throw std::runtime_error("checkpoint: unknown header key '" + key + "'");
    }
  }
  if (!saw_data) throw std::runtime_error("checkpoint: missing data marker");
  const Architecture arch(sizes);
  if (arch.num_params() != n_params) {
    throw std::runtime_error("checkpoint: n_params does not match arch");
  }
  auto mu = read_array(in, n_params, "mu");
  auto rho = read_array(in, n_params, "rho");
  auto prior_mu = read_array(in, n_params, "prior_mu");
  return GaussianPosterior::restore(arch, sigma0, seed, std::move(mu), std::move(rho),
                                    std::move(prior_mu));
}

}  // namespace pbcert

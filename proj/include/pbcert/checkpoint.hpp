#pragma once

// Posterior checkpoint file, version 1.
//
// A text header of `key value` lines terminated by a line `data`, followed
// by three little-endian IEEE-754 float64 arrays of n_params entries each,
// in the order mu, rho, prior_mu:
//
//   pbcert-checkpoint 1
//   arch 784,100,10
//   activation relu
//   seed 42
//   sigma0 0.040000000000000001
//   n_params 79510
//   data
//   <mu><rho><prior_mu>
//
// Parameter order within each array is the flat order of prob_net.hpp.

#include <filesystem>

#include "pbcert/prob_net.hpp"

namespace pbcert {

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const GaussianPosterior& post);
GaussianPosterior load_checkpoint(const std::filesystem::path& path);

}  // namespace pbcert

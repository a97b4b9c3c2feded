#pragma once

// Training configuration and its flat key-value file format:
//
//   # comment
//   arch = 784,100,10
//   objective = tf_mb
//   sigma0 = 0.04
//
// Keys are the TrainConfig field names; unknown keys are rejected.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pbcert/kl.hpp"

namespace pbcert {

enum class ObjectiveKind { f_pbq, f_rts, f_mb, tf_pbq, tf_rts, tf_mb };

std::string_view to_string(ObjectiveKind kind);
ObjectiveKind parse_objective_kind(std::string_view name);

// Plain variants optimize the bounded cross-entropy; tilde variants target
// the zero-one loss through the rolling slope between the two.
inline bool is_tilde(ObjectiveKind kind) {
  return kind == ObjectiveKind::tf_pbq || kind == ObjectiveKind::tf_rts ||
         kind == ObjectiveKind::tf_mb;
}

// PBQ, RTS or MaurerInverse.
BoundKind objective_bound(ObjectiveKind kind);

struct TrainConfig {
  std::vector<std::size_t> arch = {784, 600, 600, 10};
  double sigma0 = 0.04;
  ObjectiveKind objective = ObjectiveKind::tf_mb;
  double eta = 1.0;  // KL modulation applied to the dK coefficient
  std::size_t epochs = 100;
  std::size_t batch_size = 250;
  double learning_rate = 0.005;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double delta = 0.025;
  double delta_mc = 0.01;
  std::size_t mc_samples = 10000;
  double p_min = 1e-4;
  std::size_t n_train = 10000;
  std::size_t slope_window = 100;
  std::string train_images;
  std::string train_labels;

  // Throws std::invalid_argument naming the first bad field.
  void validate() const;
};

TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::filesystem::path& path);
void write_config(std::ostream& out, const TrainConfig& config);

}  // namespace pbcert

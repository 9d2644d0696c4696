#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "regae/codec.hpp"
#include "regae/datasets.hpp"
#include "regae/train.hpp"

namespace regae {

/// Everything needed to reproduce a run. Serialized as a flat JSON object;
/// unknown keys and ill-typed values are rejected with the field name.
struct RunConfig {
  std::string dataset = "memorize5";
  std::size_t m = 32;
  std::size_t l = 1;
  std::vector<std::size_t> encoder_hidden{64};
  std::vector<std::size_t> decoder_hidden{64};
  double lr = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch = 32;
  double grad_clip = 1.0;
  double rpb = 0.5;
  double mask_weight = 0.5;
  double emb_norm_weight = 0.2;
  double size_exponent = 1.0;
  std::string emb_norm_scope = "root";
  bool vae = false;
  double kl_weight = 0.01;
  bool sample_noise = true;
  std::size_t patience = 20;
  std::size_t max_epochs = 2000;
  double target_loss = 0.0;
  std::uint64_t seed = 0;
  std::array<double, 3> split_ratios{0.7, 0.15, 0.15};
  std::size_t augmentation = 0;
  double curriculum_fraction = 0.25;
  double curriculum_threshold = 0.8;
  double curriculum_step = 0.25;
  std::size_t curriculum_min_size = 2;
  std::size_t max_blocks = 0;  // 0: twice the largest training block count
  std::string stop_rule = "target_consistent";
  double threshold = 0.5;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  TrainConfig train_config() const;
  CellConfig cell_config() const;
  /// `max_blocks` resolved against the training data.
  DecodeOptions decode_options(std::span<const CanonicalGraph> training) const;
};

RunConfig load_run_config(const std::filesystem::path& path);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

/// Names accepted by preset(): the seven published rows plus "desk" and "desk-grid".
std::vector<std::string> preset_names();
RunConfig preset(const std::string& name);

/// Resolves a dataset reference:
///   grid-medium          all p x q grids, 2 <= p, q <= 8
///   grid:<lo>:<hi>       all p x q grids, lo <= p, q <= hi
///   memorize5            triangle, path, star, 2x2 grid, 5-cycle
///   tu:<dir>/<NAME>      TU-format files <NAME>_A.txt etc. in <dir>
///   <dir>                every *.txt edge list in a directory
///   <file>               one edge-list file
std::vector<Graph> load_dataset(const std::string& reference);

}  // namespace regae

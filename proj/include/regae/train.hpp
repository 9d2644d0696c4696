#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "regae/cells.hpp"
#include "regae/datasets.hpp"
#include "regae/loss.hpp"
#include "regae/optim.hpp"

namespace regae {

struct CurriculumState {
  double fraction = 1.0;   // subgraph size as a fraction of the full graph, in (0, 1]
  double threshold = 0.8;  // train F1 needed to grow
  double step = 0.25;
  std::size_t min_size = 2;

  void validate() const;
};

/// Grows the fraction by `step` (capped at 1) when train_f1 >= threshold.
CurriculumState curriculum_tick(const CurriculumState& state, double train_f1);

/// max(min_size, ceil(fraction * n)), never more than n.
std::size_t curriculum_window(const CurriculumState& state, std::size_t n);

struct TrainConfig {
  CellConfig cell;
  LossWeights weights;
  EmbNormScope emb_norm_scope = EmbNormScope::root;
  AdamConfig adam;
  Real grad_clip = Real(1);
  std::size_t batch = 32;
  std::size_t patience = 20;
  std::size_t max_epochs = 2000;
  /// Stop as soon as the validation loss falls below this value (0 disables).
  double target_loss = 0.0;
  /// Variational mode: feed the sampled embedding to the decoder while training.
  bool sample_noise = true;
  CurriculumState curriculum;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // weighted mean over this epoch's windows
  double valid_loss = 0.0;  // full graphs, no noise
  double train_f1 = 0.0;    // thresholded teacher-forced B over this epoch's windows
  double fraction = 0.0;    // curriculum fraction used during the epoch
  double grad_norm = 0.0;   // mean pre-clip gradient norm
  bool improved = false;

  nlohmann::json to_json() const;
  static EpochRecord from_json(const nlohmann::json& j);
  bool operator==(const EpochRecord&) const = default;
};

struct TrainResult {
  ModelParams params;  // best validation epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0.0;
  bool stopped_early = false;
};

/// Weighted full-size loss of `graphs` with the embedding mean (no sampling).
/// Returns 0 for an empty list.
double dataset_loss(std::span<const CanonicalGraph> graphs, const ModelParams& params, const LossWeights& weights,
                    EmbNormScope scope);

/// Called after every epoch with its record and the current (not best) parameters.
using EpochCallback = std::function<void(const EpochRecord&, const ModelParams&)>;

/// Mini-batch training with curriculum windows, clipping, Adam and early
/// stopping on validation loss (the training set stands in when the
/// validation set is empty). Checkpoint selection and patience start once
/// the curriculum has reached full graphs; before that the latest parameters
/// are kept. Throws NumericError on a non-finite batch loss.
TrainResult train(const DatasetSplit& split, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace regae

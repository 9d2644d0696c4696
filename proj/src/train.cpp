#include "regae/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "regae/metrics.hpp"
#include "regae/patch.hpp"

namespace regae {

void CurriculumState::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("curriculum_fraction must lie in (0, 1]");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("curriculum_threshold must lie in [0, 1]");
  if (!(step > 0.0)) throw ConfigError("curriculum_step must be positive");
  if (min_size == 0) throw ConfigError("curriculum_min_size must be positive");
}

CurriculumState curriculum_tick(const CurriculumState& state, double train_f1) {
  CurriculumState next = state;
  if (train_f1 >= state.threshold && state.fraction < 1.0) next.fraction = std::min(1.0, state.fraction + state.step);
  return next;
}

std::size_t curriculum_window(const CurriculumState& state, std::size_t n) {
  const auto scaled = static_cast<std::size_t>(std::ceil(state.fraction * static_cast<double>(n)));
  return std::min(n, std::max(state.min_size, scaled));
}

void TrainConfig::validate() const {
  cell.validate();
  weights.validate();
  curriculum.validate();
  if (!(adam.lr > 0)) throw ConfigError("lr must be positive");
  if (!(adam.beta1 >= 0 && adam.beta1 < 1) || !(adam.beta2 >= 0 && adam.beta2 < 1)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam.eps > 0)) throw ConfigError("Adam eps must be positive");
  if (!(grad_clip > 0)) throw ConfigError("grad_clip must be positive");
  if (batch == 0) throw ConfigError("batch must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (target_loss < 0) throw ConfigError("target_loss must be non-negative");
}

nlohmann::json EpochRecord::to_json() const {
  return {{"epoch", epoch},         {"train_loss", train_loss}, {"valid_loss", valid_loss}, {"train_f1", train_f1},
          {"fraction", fraction},   {"grad_norm", grad_norm},   {"improved", improved}};
}

EpochRecord EpochRecord::from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  r.valid_loss = j.at("valid_loss").get<double>();
  r.train_f1 = j.at("train_f1").get<double>();
  r.fraction = j.at("fraction").get<double>();
  r.grad_norm = j.at("grad_norm").get<double>();
  r.improved = j.at("improved").get<bool>();
  return r;
}

double dataset_loss(std::span<const CanonicalGraph> graphs, const ModelParams& params, const LossWeights& weights,
                    EmbNormScope scope) {
  double weighted = 0.0;
  double total_weight = 0.0;
  BatchLossOptions options;
  options.emb_norm_scope = scope;
  for (const auto& g : graphs) {
    Tape tape;
    const PatchGrid grid = to_patch_grid(g, params.config().l);
    const BatchLoss loss = batch_loss(tape, std::span<const PatchGrid>(&grid, 1), params, weights, options);
    weighted += loss.graphs[0].weight * loss.graphs[0].loss;
    total_weight += loss.graphs[0].weight;
  }
  return total_weight == 0.0 ? 0.0 : weighted / total_weight;
}

TrainResult train(const DatasetSplit& split, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (split.train.empty()) throw DataError("training set is empty");

  ModelParams params(config.cell, mix_seed(config.seed, 1));
  std::vector<Parameter*> handles = params.parameters();
  std::mt19937_64 rng(mix_seed(config.seed, 2));
  // Separate stream, so turning sampling on leaves the data order untouched.
  std::mt19937_64 noise_rng(mix_seed(config.seed, 3));
  const std::size_t l = config.cell.l;
  const std::span<const CanonicalGraph> valid = split.valid.empty() ? std::span<const CanonicalGraph>(split.train)
                                                                     : std::span<const CanonicalGraph>(split.valid);

  TrainResult result{params, {}, 0, std::numeric_limits<double>::infinity(), false};
  CurriculumState curriculum = config.curriculum;
  std::size_t since_improvement = 0;
  std::vector<std::size_t> order(split.train.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord record;
    record.epoch = epoch;
    record.fraction = curriculum.fraction;

    double loss_sum = 0.0;
    double weight_sum = 0.0;
    double norm_sum = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      std::vector<PatchGrid> grids;
      BatchLossOptions options;
      options.emb_norm_scope = config.emb_norm_scope;
      options.sample_noise = config.cell.variational && config.sample_noise;
      for (std::size_t k = begin; k < end; ++k) {
        const CanonicalGraph& g = split.train[order[k]];
        const std::size_t n = g.vertex_count();
        const std::size_t size = curriculum_window(curriculum, n);
        const std::size_t start = std::uniform_int_distribution<std::size_t>(0, n - size)(rng);
        grids.push_back(to_patch_grid(size == n ? g : extract_window_subgraph(g, start, size), l));
        if (options.sample_noise) options.noise_seeds.push_back(noise_rng());
      }

      Tape tape;
      tape.track(handles);
      const BatchLoss loss = batch_loss(tape, grids, params, config.weights, options);
      const double value = loss.total.item();
      if (!std::isfinite(value)) {
        std::string ids;
        for (std::size_t k = begin; k < end; ++k) ids += (ids.empty() ? "" : ",") + std::to_string(order[k]);
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batches) + " (training graphs " + ids + ")");
      }
      tape.backward(loss.total);
      norm_sum += clip_global_norm(handles, config.grad_clip);
      adam_step(handles, config.adam);

      for (const auto& info : loss.graphs) {
        loss_sum += info.weight * info.loss;
        weight_sum += info.weight;
        tp += info.tp;
        fp += info.fp;
        fn += info.fn;
      }
      ++batches;
    }
    record.train_loss = loss_sum / weight_sum;
    record.grad_norm = norm_sum / static_cast<double>(batches);
    record.train_f1 = class_one_scores(tp, fp, fn).f1;
    record.valid_loss = dataset_loss(valid, params, config.weights, config.emb_norm_scope);
    if (!std::isfinite(record.valid_loss)) {
      throw NumericError("non-finite validation loss after epoch " + std::to_string(epoch));
    }

    // Window-trained epochs are not comparable with full-size validation, so
    // selection starts once the curriculum reaches full graphs.
    const bool full_size = curriculum.fraction >= 1.0;
    record.improved = full_size && record.valid_loss < result.best_valid_loss;
    if (record.improved) {
      result.best_valid_loss = record.valid_loss;
      result.best_epoch = epoch;
      result.params = params;
      since_improvement = 0;
    } else if (full_size) {
      ++since_improvement;
    } else {
      result.params = params;
    }
    result.history.push_back(record);
    if (on_epoch) on_epoch(record, params);

    if (config.target_loss > 0 && record.valid_loss < config.target_loss) break;
    if (since_improvement > config.patience) {
      result.stopped_early = true;
      break;
    }
    curriculum = curriculum_tick(curriculum, record.train_f1);
  }
  return result;
}

}  // namespace regae

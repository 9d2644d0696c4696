#include "regae/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace regae {

void LossWeights::validate() const {
  if (!(rpb > 0 && rpb < 1)) throw ConfigError("rpb must lie in (0, 1)");
  if (mask_weight < 0 || emb_norm_weight < 0 || size_exponent < 0 || kl_weight < 0) {
    throw ConfigError("loss weights must be non-negative");
  }
}

DecodeTargets decode_targets(std::span<const DecodedBlock> blocks, const PatchGrid& target) {
  const std::size_t l = target.patch_side();
  const std::size_t n = target.vertex_count();
  const std::size_t expected = target.block_count();
  if (blocks.size() != expected) {
    throw ShapeError("loss: decoded " + std::to_string(blocks.size()) + " blocks, target needs " +
                     std::to_string(expected));
  }
  std::set<BlockIndex> seen;
  for (const auto& b : blocks) {
    if (b.index.row + b.index.col >= target.blocks_per_side() || !seen.insert(b.index).second) {
      throw ShapeError("loss: decoded region does not match the target's block triangle");
    }
    if (b.b_logits.size() != l * l || b.c_logits.size() != l * l) {
      throw ShapeError("loss: logit block size does not match patch side " + std::to_string(l));
    }
  }

  DecodeTargets t;
  t.c.reserve(blocks.size() * l * l);
  std::size_t flat = 0;
  for (const auto& b : blocks) {
    for (std::size_t r = 0; r < l; ++r) {
      for (std::size_t c = 0; c < l; ++c, ++flat) {
        const std::size_t i = b.index.row * l + r;
        const std::size_t j = b.index.col * l + c;
        const bool inside = i + j + 2 <= n;
        t.c.push_back(inside ? Real(1) : Real(0));
        if (inside) {
          // B(i, j) targets A[n - i][j + 1] (1-based), i.e. 0-based (n - i - 1, j).
          (target.adjacent(n - i - 1, j) ? t.positive : t.negative).push_back(flat);
        } else if (i + j + 1 == n) {
          t.negative.push_back(flat);
        }
      }
    }
  }
  return t;
}

namespace {

Var concat_logits(std::span<const DecodedBlock> blocks, bool b_part) {
  std::vector<Var> parts;
  parts.reserve(blocks.size());
  for (const auto& b : blocks) parts.push_back(b_part ? b.b_logits : b.c_logits);
  return concat(parts);
}

Var class_term(Var logits, const std::vector<std::size_t>& indices, Real target) {
  const std::vector<Real> targets(indices.size(), target);
  return mean(bce_with_logits(select(logits, indices), targets));
}

}  // namespace

Var reconstruction_loss(std::span<const DecodedBlock> blocks, const PatchGrid& target, Var embedding_penalty,
                        const LossWeights& weights) {
  const DecodeTargets t = decode_targets(blocks, target);
  const Var b_all = concat_logits(blocks, true);
  const Var c_all = concat_logits(blocks, false);
  Var loss = scale(mean(bce_with_logits(c_all, t.c)), weights.mask_weight);
  if (!t.positive.empty()) loss = add(loss, scale(class_term(b_all, t.positive, Real(1)), weights.rpb));
  if (!t.negative.empty()) loss = add(loss, scale(class_term(b_all, t.negative, Real(0)), Real(1) - weights.rpb));
  loss = add(loss, scale(embedding_penalty, weights.emb_norm_weight));
  return loss;
}

Var reconstruction_loss_with_root(std::span<const DecodedBlock> blocks, const PatchGrid& target, Var root,
                                  const LossWeights& weights) {
  return reconstruction_loss(blocks, target, squared_norm(root), weights);
}

BatchLoss batch_loss(Tape& tape, std::span<const PatchGrid> graphs, const ModelParams& params,
                     const LossWeights& weights, const BatchLossOptions& options) {
  if (graphs.empty()) throw std::invalid_argument("batch_loss: empty batch");
  if (options.sample_noise && options.noise_seeds.size() != graphs.size()) {
    throw std::invalid_argument("batch_loss: one noise seed per graph required");
  }
  const bool variational = params.config().variational;
  BatchLoss out;
  std::vector<Var> terms;
  double total_weight = 0.0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const PatchGrid& grid = graphs[g];
    std::vector<Var> diagonal;
    const Var root = encode(tape, params, grid, nullptr, {}, &diagonal);
    Var decoder_input = root;
    Var kl;
    if (variational) {
      const auto head = variational_head(tape, params, root, options.sample_noise ? options.noise_seeds[g] : 0);
      if (options.sample_noise) decoder_input = head.sample;
      kl = head.kl;
    }
    const DecoderRun run = decode_teacher_forced(tape, params, decoder_input, grid.blocks_per_side());

    Var penalty;
    if (options.emb_norm_scope == EmbNormScope::diagonal) {
      std::vector<Var> norms;
      for (Var d : diagonal) norms.push_back(squared_norm(d));
      penalty = mean(concat(norms));
    } else {
      penalty = squared_norm(root);
    }
    Var loss = reconstruction_loss(run.blocks, grid, penalty, weights);
    if (variational) loss = add(loss, scale(kl, weights.kl_weight));

    GraphLossInfo info;
    info.loss = loss.item();
    info.weight = std::pow(static_cast<double>(grid.blocks_per_side()), static_cast<double>(weights.size_exponent));
    const DecodeTargets t = decode_targets(run.blocks, grid);
    const std::size_t l = grid.patch_side();
    const auto b_value = [&](std::size_t flat) { return run.blocks[flat / (l * l)].b_logits.values()[flat % (l * l)]; };
    // Only the strictly-lower-triangle entries count; the diagonal negatives do not.
    const std::size_t n = grid.vertex_count();
    for (std::size_t flat : t.positive) (b_value(flat) >= 0 ? info.tp : info.fn)++;
    for (std::size_t flat : t.negative) {
      const auto& blk = run.blocks[flat / (l * l)];
      const std::size_t local = flat % (l * l);
      const std::size_t i = blk.index.row * l + local / l;
      const std::size_t j = blk.index.col * l + local % l;
      if (i + j + 2 <= n && b_value(flat) >= 0) ++info.fp;
    }
    out.graphs.push_back(info);
    terms.push_back(loss);
  }

  // Sorted reductions keep the result independent of batch order.
  std::vector<double> sorted_weights;
  for (const auto& info : out.graphs) sorted_weights.push_back(info.weight);
  std::sort(sorted_weights.begin(), sorted_weights.end());
  for (double w : sorted_weights) total_weight += w;

  std::vector<std::size_t> order(terms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<Var> scaled(terms.size());
  for (std::size_t g = 0; g < terms.size(); ++g) {
    scaled[g] = scale(terms[g], static_cast<Real>(out.graphs[g].weight / total_weight));
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scaled[a].item() < scaled[b].item();
  });
  Var total = scaled[order[0]];
  for (std::size_t k = 1; k < order.size(); ++k) total = add(total, scaled[order[k]]);
  out.total = total;
  return out;
}

}  // namespace regae

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "regae/codec.hpp"

namespace regae {

struct LossWeights {
  Real rpb = Real(0.5);              // weight of the class-1 term; class-0 gets 1 - rpb
  Real mask_weight = Real(0.5);      // C term
  Real emb_norm_weight = Real(0.2);  // squared embedding norm
  Real size_exponent = Real(1);      // per-graph weight n_blocks^d
  Real kl_weight = Real(0.01);       // variational mode only

  void validate() const;
};

enum class EmbNormScope {
  root,      // |x(n_blocks-1, 0)|^2
  diagonal,  // mean of |x(K, K)|^2 over the first encoder layer
};

/// Targets of one teacher-forced decode, laid out like the concatenation of
/// the decoded blocks' l*l logits (block order, then row-major).
struct DecodeTargets {
  std::vector<std::size_t> positive;  // B entries whose target is 1
  std::vector<std::size_t> negative;  // B entries whose target is 0 (including the diagonal)
  std::vector<Real> c;                // C target for every entry
};

/// Global entry (i, j) of block `b` maps to A^[n-i, j+1] (1-based). B entries
/// with i + j > n - 1 are excluded; C's target is 1{i + j <= n - 2}.
DecodeTargets decode_targets(std::span<const DecodedBlock> blocks, const PatchGrid& target);

/// rpb * mean BCE(B | 1) + (1 - rpb) * mean BCE(B | 0) + mask_weight * mean BCE(C)
/// + emb_norm_weight * embedding_penalty. An empty class contributes 0.
/// `blocks` must be exactly the teacher-forced triangle of the target.
Var reconstruction_loss(std::span<const DecodedBlock> blocks, const PatchGrid& target, Var embedding_penalty,
                        const LossWeights& weights);

/// Convenience overload: the penalty is |root|^2.
Var reconstruction_loss_with_root(std::span<const DecodedBlock> blocks, const PatchGrid& target, Var root,
                                  const LossWeights& weights);

struct BatchLossOptions {
  EmbNormScope emb_norm_scope = EmbNormScope::root;
  /// In variational mode the decoder sees x + xi o exp(rho); one noise seed per graph.
  bool sample_noise = false;
  std::vector<std::uint64_t> noise_seeds;
};

struct GraphLossInfo {
  double loss = 0.0;    // unweighted per-graph loss
  double weight = 0.0;  // n_blocks^d
  std::size_t tp = 0, fp = 0, fn = 0;  // thresholded teacher-forced B on real entries
};

struct BatchLoss {
  Var total;
  std::vector<GraphLossInfo> graphs;
};

/// Weighted mean of per-graph losses with weights n_blocks^d. Decoding is
/// teacher-forced to each target's block count. Terms are reduced in sorted
/// order so the result does not depend on batch order.
BatchLoss batch_loss(Tape& tape, std::span<const PatchGrid> graphs, const ModelParams& params,
                     const LossWeights& weights, const BatchLossOptions& options = {});

}  // namespace regae

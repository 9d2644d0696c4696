#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "regae/cells.hpp"
#include "regae/graph.hpp"
#include "regae/patch.hpp"

namespace regae {

/// Visits every encoder block in dependency order: diagonal blocks first, then
/// layers of increasing row - col. Inside a layer blocks are independent; with
/// `shuffle_seed` their visiting order is permuted.
template <class Visit>
void encoder_schedule(std::size_t n_blocks, Visit&& visit, std::optional<std::uint64_t> shuffle_seed = {}) {
  std::optional<std::mt19937_64> rng;
  if (shuffle_seed) rng.emplace(*shuffle_seed);
  std::vector<BlockIndex> layer;
  for (std::size_t gap = 0; gap < n_blocks; ++gap) {
    layer.clear();
    for (std::size_t col = 0; col + gap < n_blocks; ++col) layer.push_back({col + gap, col});
    if (rng) std::shuffle(layer.begin(), layer.end(), *rng);
    for (const auto& idx : layer) visit(idx);
  }
}

struct EncodeOptions {
  std::optional<std::uint64_t> shuffle_seed;
};

struct EncodeTrace {
  std::size_t n_blocks = 0;
  std::map<BlockIndex, std::vector<Real>> x;
  std::vector<Real> root;
  std::size_t cell_invocations = 0;
  std::vector<BlockIndex> visit_order;
};

/// Recursive encoder. x(K,K) = e(null, null, block(K,K)); for row > col,
/// x(row,col) = e(x(row-1,col), x(row,col+1), block(row,col)). Returns the root
/// x(n_blocks-1, 0). `trace`, when given, receives every embedding;
/// `diagonal`, when given, receives the first-layer embeddings x(K, K).
Var encode(Tape& tape, const ModelParams& params, const PatchGrid& grid, EncodeTrace* trace = nullptr,
           const EncodeOptions& options = {}, std::vector<Var>* diagonal = nullptr);

EncodeTrace encode(const PatchGrid& grid, const ModelParams& params, const EncodeOptions& options = {});

/// One decoder cell output, at block (row, col) of the re-indexed B/C matrices
/// (row 0 is the bottom row of the adjacency matrix, col 0 its left column).
struct DecodedBlock {
  BlockIndex index;
  Var b_logits;
  Var c_logits;
};

struct DecoderRun {
  std::vector<DecodedBlock> blocks;  // in antidiagonal order
  std::size_t layers = 0;
  bool stopped = false;
  std::size_t cell_invocations = 0;
};

/// Stop predicate evaluated after each antidiagonal: (index, its blocks).
using StopPredicate = std::function<bool(std::size_t, std::span<const DecodedBlock>)>;

/// The decoder recursion. Antidiagonal s holds blocks (s - k, k). After
/// decoding antidiagonal s the predicate is consulted; if it does not fire and
/// s + 1 < max_layers, the next antidiagonal's embeddings are assembled from
/// decoder half-outputs plus the border cells at both ends.
DecoderRun run_decoder(Tape& tape, const ModelParams& params, Var x, std::size_t max_layers,
                       const StopPredicate& stop = {});

/// Decoder run for exactly `n_blocks` antidiagonals (training).
DecoderRun decode_teacher_forced(Tape& tape, const ModelParams& params, Var x, std::size_t n_blocks);

/// Per-entry logits of a triangular block region, addressed by global (i, j).
class LogitField {
 public:
  explicit LogitField(std::size_t patch_side = 1) : side_(patch_side) {}

  void set_block(BlockIndex idx, std::span<const Real> values);
  std::optional<Real> at(std::size_t i, std::size_t j) const;

  std::size_t patch_side() const { return side_; }
  const std::map<BlockIndex, std::vector<Real>>& blocks() const { return blocks_; }

 private:
  std::size_t side_;
  std::map<BlockIndex, std::vector<Real>> blocks_;
};

enum class StopRule {
  target_consistent,  // stop at antidiagonal s when mean s(C) < 0.5; s + 1 blocks
  verbatim,           // same test, but never before antidiagonal 1 (at least 2 blocks)
};

struct DecodeOptions {
  std::size_t max_blocks = 16;
  StopRule stop_rule = StopRule::target_consistent;
  Real threshold = Real(0.5);
};

struct DecodeResult {
  Graph a_hat;
  std::size_t n_hat = 0;
  std::size_t n_blocks = 0;
  LogitField b_logits;
  LogitField c_logits;
  bool truncated = false;
  std::size_t cell_invocations = 0;
};

/// Free-running decode with size inference. When the stop rule never fires
/// within `max_blocks` antidiagonals the result is flagged `truncated` and
/// sized as if max_blocks blocks had been produced.
DecodeResult decode(std::span<const Real> x, const ModelParams& params, const DecodeOptions& options);

/// A^[n-i, j+1] = 1 iff s(B[i][j]) >= threshold, for i + j <= n - 2 (1-based A^).
/// Throws DataError if a required entry is missing.
Graph remap_B_to_A(const LogitField& b_logits, std::size_t n_hat, Real threshold = Real(0.5));

/// Exact size from C: the candidate n in ((n_blocks-1) l, n_blocks l] whose
/// target pattern 1{i + j <= n - 2} best agrees with s(C) >= threshold over
/// every produced entry. Ties go to the smaller n.
std::size_t infer_exact_size(const LogitField& c_logits, std::size_t n_blocks, std::size_t l,
                             Real threshold = Real(0.5));

/// Embedding file: u32 m, then m float32 values, little-endian.
void write_embedding(std::ostream& out, std::span<const Real> x);
std::vector<Real> read_embedding(std::istream& in);
void save_embedding(const std::filesystem::path& path, std::span<const Real> x);
std::vector<Real> load_embedding(const std::filesystem::path& path);

}  // namespace regae

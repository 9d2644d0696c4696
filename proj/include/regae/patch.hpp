#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "regae/common.hpp"
#include "regae/graph.hpp"

namespace regae {

/// Block position in a lower-triangular tiling, 0-based, `col <= row`.
struct BlockIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  friend auto operator<=>(const BlockIndex&, const BlockIndex&) = default;
};

inline std::size_t triangular_count(std::size_t n_blocks) { return n_blocks * (n_blocks + 1) / 2; }

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// Lower-triangular l x l block decomposition of an adjacency matrix.
///
/// Global entry (i, j) (0-based) holds A[i][j] when i > j and both are below n;
/// every entry on or above the diagonal, and every padding entry past n, is -1.
/// Blocks are stored row-major inside, and only blocks with row >= col exist.
class PatchGrid {
 public:
  PatchGrid(const Graph& g, std::size_t patch_side);

  std::size_t patch_side() const { return side_; }
  std::size_t vertex_count() const { return n_; }
  std::size_t blocks_per_side() const { return n_blocks_; }
  std::size_t block_count() const { return triangular_count(n_blocks_); }

  /// Row-major l*l entries of block (row, col); requires col <= row < blocks_per_side().
  std::span<const Real> block(BlockIndex idx) const;

  /// Global entry in {-1, 0, 1}; positions past the padded extent are -1.
  int entry(std::size_t i, std::size_t j) const;

  /// Adjacency bit for 0-based vertices, false for i == j or out of range.
  bool adjacent(std::size_t i, std::size_t j) const;

 private:
  std::size_t offset(BlockIndex idx) const;

  std::size_t side_;
  std::size_t n_;
  std::size_t n_blocks_;
  std::vector<Real> data_;
};

PatchGrid to_patch_grid(const CanonicalGraph& g, std::size_t patch_side);

}  // namespace regae

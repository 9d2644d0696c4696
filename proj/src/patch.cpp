#include "regae/patch.hpp"

#include <stdexcept>
#include <string>

namespace regae {

PatchGrid::PatchGrid(const Graph& g, std::size_t patch_side)
    : side_(patch_side), n_(g.vertex_count()), n_blocks_(0) {
  if (patch_side < 1) throw std::invalid_argument("patch side must be >= 1");
  n_blocks_ = ceil_div(n_, side_);
  data_.assign(block_count() * side_ * side_, Real(-1));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const BlockIndex idx{i / side_, j / side_};
      data_[offset(idx) + (i % side_) * side_ + (j % side_)] = g.has_edge(i, j) ? Real(1) : Real(0);
    }
  }
}

std::size_t PatchGrid::offset(BlockIndex idx) const {
  return (triangular_count(idx.row) + idx.col) * side_ * side_;
}

std::span<const Real> PatchGrid::block(BlockIndex idx) const {
  if (idx.col > idx.row || idx.row >= n_blocks_) {
    throw std::out_of_range("block (" + std::to_string(idx.row) + ", " + std::to_string(idx.col) +
                            ") outside the lower triangle of " + std::to_string(n_blocks_) + " blocks");
  }
  return {data_.data() + offset(idx), side_ * side_};
}

int PatchGrid::entry(std::size_t i, std::size_t j) const {
  if (j > i || i >= n_blocks_ * side_) return -1;
  return static_cast<int>(data_[offset({i / side_, j / side_}) + (i % side_) * side_ + (j % side_)]);
}

bool PatchGrid::adjacent(std::size_t i, std::size_t j) const {
  if (i == j || i >= n_ || j >= n_) return false;
  return i > j ? entry(i, j) == 1 : entry(j, i) == 1;
}

PatchGrid to_patch_grid(const CanonicalGraph& g, std::size_t patch_side) {
  return PatchGrid(g.graph, patch_side);
}

}  // namespace regae

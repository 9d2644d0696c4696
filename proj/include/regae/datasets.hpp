#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "regae/graph.hpp"

namespace regae {

/// Summary statistics in the layout of the usual dataset tables.
struct DatasetStats {
  std::size_t count = 0;
  double avg_nodes = 0.0;
  std::size_t max_nodes = 0;
  double avg_edges = 0.0;
  double fill = 0.0;  // mean of |E| / C(n, 2)
};

DatasetStats dataset_stats(const std::vector<Graph>& graphs);

/// All p x q lattices for p, q in [min_side, max_side], p-major.
/// The default range gives the 49-graph GRID-MEDIUM set.
std::vector<Graph> generate_grid_dataset(std::size_t min_side = 2, std::size_t max_side = 8);

/// triangle, path-4, star-4 (K_{1,3}), 2x2 grid and 5-cycle.
std::vector<Graph> memorization_set();

struct TuDataset {
  std::vector<Graph> graphs;
  std::vector<long> labels;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicate_edges_collapsed = 0;
};

/// Reads `<dir>/<name>_A.txt`, `<name>_graph_indicator.txt` and
/// `<name>_graph_labels.txt`. Throws DataError naming file and line.
TuDataset load_tu_dataset(const std::filesystem::path& dir, const std::string& name);

/// Edge-list format: first line `n`, then one `i j` pair (0-based) per line.
void write_edge_list(std::ostream& out, const Graph& g);
Graph read_edge_list(std::istream& in, const std::string& source = "<stream>");
void save_edge_list(const std::filesystem::path& path, const Graph& g);
Graph load_edge_list(const std::filesystem::path& path);
/// Every `*.txt` edge-list file in `dir`, in lexicographic filename order.
std::vector<Graph> load_edge_list_dir(const std::filesystem::path& dir);

/// Which base graphs went where, plus everything needed to rebuild the split.
struct SplitManifest {
  std::uint64_t seed = 0;
  std::size_t augmentation_factor = 0;
  std::array<double, 3> ratios{0.7, 0.15, 0.15};
  std::size_t base_count = 0;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> valid_ids;
  std::vector<std::size_t> test_ids;

  nlohmann::json to_json() const;
  static SplitManifest from_json(const nlohmann::json& j);
};

struct DatasetSplit {
  std::vector<CanonicalGraph> train;
  std::vector<CanonicalGraph> valid;
  std::vector<CanonicalGraph> test;
  std::size_t augmentation_factor = 0;
  SplitManifest manifest;
};

/// Shuffles base graphs, cuts train = round(r0 K), valid = round(r1 K),
/// test = rest, then adds `augmentation_factor` permuted copies of each base
/// graph inside its own subset. Every copy is canonicalised independently.
DatasetSplit split_dataset(const std::vector<Graph>& graphs, std::array<double, 3> ratios,
                           std::size_t augmentation_factor, std::uint64_t seed);

/// Rebuilds exactly the split described by `manifest`.
DatasetSplit apply_split_manifest(const std::vector<Graph>& graphs, const SplitManifest& manifest);

}  // namespace regae

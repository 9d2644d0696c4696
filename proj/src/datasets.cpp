#include "regae/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string_view>

#include "regae/common.hpp"

namespace regae {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_at(const std::filesystem::path& file, std::size_t line, const std::string& what) {
  throw DataError(file.string() + ":" + std::to_string(line) + ": " + what);
}

long parse_long(std::string_view token, const std::filesystem::path& file, std::size_t line) {
  token = trim(token);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc{} || ptr != token.data() + token.size()) {
    fail_at(file, line, "non-integer token '" + std::string(token) + "'");
  }
  return value;
}

std::vector<std::string> read_lines(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw DataError("missing file: " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

DatasetStats dataset_stats(const std::vector<Graph>& graphs) {
  DatasetStats s;
  s.count = graphs.size();
  if (graphs.empty()) return s;
  double nodes = 0.0;
  double edges = 0.0;
  double fill = 0.0;
  for (const auto& g : graphs) {
    const double n = static_cast<double>(g.vertex_count());
    nodes += n;
    edges += static_cast<double>(g.edge_count());
    s.max_nodes = std::max(s.max_nodes, g.vertex_count());
    if (g.vertex_count() > 1) fill += static_cast<double>(g.edge_count()) / (n * (n - 1.0) / 2.0);
  }
  const double k = static_cast<double>(graphs.size());
  s.avg_nodes = nodes / k;
  s.avg_edges = edges / k;
  s.fill = fill / k;
  return s;
}

std::vector<Graph> generate_grid_dataset(std::size_t min_side, std::size_t max_side) {
  std::vector<Graph> out;
  for (std::size_t p = min_side; p <= max_side; ++p) {
    for (std::size_t q = min_side; q <= max_side; ++q) out.push_back(grid_graph(p, q));
  }
  return out;
}

std::vector<Graph> memorization_set() {
  return {
      Graph(3, {{0, 1}, {1, 2}, {0, 2}}),
      Graph(4, {{0, 1}, {1, 2}, {2, 3}}),
      Graph(4, {{0, 1}, {0, 2}, {0, 3}}),
      grid_graph(2, 2),
      Graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}),
  };
}

TuDataset load_tu_dataset(const std::filesystem::path& dir, const std::string& name) {
  const auto edges_file = dir / (name + "_A.txt");
  const auto indicator_file = dir / (name + "_graph_indicator.txt");
  const auto labels_file = dir / (name + "_graph_labels.txt");
  // Read all three up-front so a missing file is reported before any parsing.
  const auto edge_lines = read_lines(edges_file);
  const auto indicator_lines = read_lines(indicator_file);
  const auto label_lines = read_lines(labels_file);

  // node (1-based, global) -> graph id
  std::vector<long> graph_of;
  graph_of.reserve(indicator_lines.size());
  for (std::size_t i = 0; i < indicator_lines.size(); ++i) {
    if (trim(indicator_lines[i]).empty()) continue;
    graph_of.push_back(parse_long(indicator_lines[i], indicator_file, i + 1));
  }

  std::map<long, std::size_t> graph_slot;
  for (long id : graph_of) graph_slot.emplace(id, 0);
  std::size_t slot = 0;
  for (auto& [id, s] : graph_slot) s = slot++;

  std::vector<std::size_t> sizes(graph_slot.size(), 0);
  std::vector<std::size_t> local_index(graph_of.size());
  for (std::size_t v = 0; v < graph_of.size(); ++v) {
    local_index[v] = sizes[graph_slot[graph_of[v]]]++;
  }

  TuDataset out;
  out.graphs.reserve(sizes.size());
  for (std::size_t n : sizes) out.graphs.emplace_back(n);

  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    const std::string_view line = trim(edge_lines[i]);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) fail_at(edges_file, i + 1, "expected 'a, b'");
    const long a = parse_long(line.substr(0, comma), edges_file, i + 1);
    const long b = parse_long(line.substr(comma + 1), edges_file, i + 1);
    const auto node_count = static_cast<long>(graph_of.size());
    if (a < 1 || b < 1 || a > node_count || b > node_count) {
      fail_at(edges_file, i + 1, "vertex id outside [1, " + std::to_string(node_count) + "]");
    }
    const auto ua = static_cast<std::size_t>(a - 1);
    const auto ub = static_cast<std::size_t>(b - 1);
    if (graph_of[ua] != graph_of[ub]) {
      fail_at(edges_file, i + 1,
              "edge joins vertices of graphs " + std::to_string(graph_of[ua]) + " and " +
                  std::to_string(graph_of[ub]));
    }
    if (ua == ub) {
      ++out.self_loops_dropped;
      continue;
    }
    if (!out.graphs[graph_slot[graph_of[ua]]].add_edge(local_index[ua], local_index[ub])) {
      ++out.duplicate_edges_collapsed;
    }
  }

  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    if (trim(label_lines[i]).empty()) continue;
    out.labels.push_back(parse_long(label_lines[i], labels_file, i + 1));
  }
  if (out.labels.size() != out.graphs.size()) {
    throw DataError(labels_file.string() + ": " + std::to_string(out.labels.size()) + " labels for " +
                    std::to_string(out.graphs.size()) + " graphs");
  }
  return out;
}

void write_edge_list(std::ostream& out, const Graph& g) {
  out << g.vertex_count() << '\n';
  for (const auto& [u, v] : g.edges()) out << u << ' ' << v << '\n';
}

Graph read_edge_list(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  long n = -1;
  std::vector<Edge> edges;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    if (n < 0) {
      n = parse_long(text, source, line_no);
      if (n < 1) fail_at(source, line_no, "vertex count must be positive");
      continue;
    }
    const auto space = text.find_first_of(" \t");
    if (space == std::string_view::npos) fail_at(source, line_no, "expected 'i j'");
    const long u = parse_long(text.substr(0, space), source, line_no);
    const long v = parse_long(text.substr(space + 1), source, line_no);
    if (u < 0 || v < 0 || u >= n || v >= n || u == v) {
      fail_at(source, line_no, "invalid edge " + std::to_string(u) + " " + std::to_string(v));
    }
    edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
  }
  if (n < 0) throw DataError(source + ": empty edge list");
  return Graph(static_cast<std::size_t>(n), edges);
}

void save_edge_list(const std::filesystem::path& path, const Graph& g) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_edge_list(out, g);
  if (!out) throw DataError("write failed: " + path.string());
}

Graph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing file: " + path.string());
  return read_edge_list(in, path.string());
}

std::vector<Graph> load_edge_list_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Graph> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_edge_list(f));
  return out;
}

nlohmann::json SplitManifest::to_json() const {
  return {{"seed", seed},
          {"augmentation_factor", augmentation_factor},
          {"ratios", ratios},
          {"base_count", base_count},
          {"train", train_ids},
          {"valid", valid_ids},
          {"test", test_ids}};
}

SplitManifest SplitManifest::from_json(const nlohmann::json& j) {
  SplitManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.augmentation_factor = j.at("augmentation_factor").get<std::size_t>();
    m.ratios = j.at("ratios").get<std::array<double, 3>>();
    m.base_count = j.at("base_count").get<std::size_t>();
    m.train_ids = j.at("train").get<std::vector<std::size_t>>();
    m.valid_ids = j.at("valid").get<std::vector<std::size_t>>();
    m.test_ids = j.at("test").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed split manifest: ") + e.what());
  }
  return m;
}

namespace {

std::vector<CanonicalGraph> build_subset(const std::vector<Graph>& graphs, const std::vector<std::size_t>& ids,
                                         std::size_t copies, std::uint64_t seed) {
  std::vector<CanonicalGraph> out;
  out.reserve(ids.size() * (copies + 1));
  for (std::size_t id : ids) {
    if (id >= graphs.size()) throw DataError("split references graph " + std::to_string(id));
    out.push_back(canonical_order(graphs[id]));
    for (std::size_t c = 0; c < copies; ++c) {
      out.push_back(canonical_order(permute_graph(graphs[id], mix_seed(mix_seed(seed, id), c))));
    }
  }
  return out;
}

}  // namespace

DatasetSplit apply_split_manifest(const std::vector<Graph>& graphs, const SplitManifest& manifest) {
  if (manifest.base_count != graphs.size()) {
    throw DataError("split manifest expects " + std::to_string(manifest.base_count) + " graphs, got " +
                    std::to_string(graphs.size()));
  }
  DatasetSplit split;
  split.augmentation_factor = manifest.augmentation_factor;
  split.manifest = manifest;
  const std::uint64_t aug_seed = mix_seed(manifest.seed, 0xa09e667f3bcc908bULL);
  split.train = build_subset(graphs, manifest.train_ids, manifest.augmentation_factor, aug_seed);
  split.valid = build_subset(graphs, manifest.valid_ids, manifest.augmentation_factor, aug_seed);
  split.test = build_subset(graphs, manifest.test_ids, manifest.augmentation_factor, aug_seed);
  return split;
}

DatasetSplit split_dataset(const std::vector<Graph>& graphs, std::array<double, 3> ratios,
                           std::size_t augmentation_factor, std::uint64_t seed) {
  if (graphs.empty()) throw DataError("cannot split an empty dataset");
  for (const auto& g : graphs) {
    if (g.vertex_count() == 0) throw DataError("dataset contains an empty graph");
  }
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ConfigError("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
  const std::size_t k = graphs.size();
  std::vector<std::size_t> ids(k);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);

  const auto n_train = std::min(k, static_cast<std::size_t>(std::llround(ratios[0] * static_cast<double>(k))));
  const auto n_valid =
      std::min(k - n_train, static_cast<std::size_t>(std::llround(ratios[1] * static_cast<double>(k))));

  SplitManifest m;
  m.seed = seed;
  m.augmentation_factor = augmentation_factor;
  m.ratios = ratios;
  m.base_count = k;
  m.train_ids.assign(ids.begin(), ids.begin() + n_train);
  m.valid_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_valid);
  m.test_ids.assign(ids.begin() + n_train + n_valid, ids.end());
  return apply_split_manifest(graphs, m);
}

}  // namespace regae

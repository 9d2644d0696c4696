#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "regae/codec.hpp"
#include "regae/graph.hpp"

namespace regae {

/// Class-1 confusion counts over strictly-lower-triangle adjacency entries.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

/// Compares two adjacency matrices after zero-padding both to the larger size.
Confusion compare_adjacency(const Graph& truth, const Graph& predicted);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Precision/recall/F1 of class 1. With no positives on either side all three
/// are 1; when only one side is empty the F1 is 0.
ClassScores class_one_scores(std::size_t tp, std::size_t fp, std::size_t fn);
inline ClassScores class_one_scores(const Confusion& c) { return class_one_scores(c.tp, c.fp, c.fn); }

struct GraphEvaluation {
  std::size_t n = 0;
  std::size_t n_hat = 0;
  bool truncated = false;
  Confusion confusion;
  ClassScores scores;
};

GraphEvaluation evaluate_pair(const Graph& truth, const Graph& predicted);

struct MetricsReport {
  std::size_t graph_count = 0;
  double f1 = 0.0;         // vertex-count weighted
  double precision = 0.0;  // vertex-count weighted
  double recall = 0.0;     // vertex-count weighted
  double size_accuracy = 0.0;
  double mean_size_error = 0.0;  // mean |n_hat - n| / mean n
  std::vector<GraphEvaluation> graphs;

  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

MetricsReport summarize(std::span<const GraphEvaluation> graphs);

/// Encode, free-running decode and score every graph. With threads > 1 graphs
/// are spread over worker threads; results are merged in input order.
MetricsReport evaluate(std::span<const CanonicalGraph> graphs, const ModelParams& params, const DecodeOptions& options,
                       std::size_t threads = 1);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single run
};

struct AggregateReport {
  std::size_t runs = 0;
  MetricSummary f1, precision, recall, size_accuracy, mean_size_error;

  nlohmann::json to_json() const;
};

AggregateReport aggregate(std::span<const MetricsReport> reports);

}  // namespace regae

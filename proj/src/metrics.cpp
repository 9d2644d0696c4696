#include "regae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "regae/patch.hpp"

namespace regae {

Confusion compare_adjacency(const Graph& truth, const Graph& predicted) {
  const std::size_t n = std::max(truth.vertex_count(), predicted.vertex_count());
  Confusion c;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const bool t = truth.has_edge(i, j);
      const bool p = predicted.has_edge(i, j);
      if (t && p) ++c.tp;
      else if (p) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  }
  return c;
}

ClassScores class_one_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  const std::size_t predicted = tp + fp;
  const std::size_t actual = tp + fn;
  if (predicted == 0 && actual == 0) return {1.0, 1.0, 1.0};
  ClassScores s;
  s.precision = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  s.recall = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
  s.f1 = s.precision + s.recall == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

GraphEvaluation evaluate_pair(const Graph& truth, const Graph& predicted) {
  GraphEvaluation e;
  e.n = truth.vertex_count();
  e.n_hat = predicted.vertex_count();
  e.confusion = compare_adjacency(truth, predicted);
  e.scores = class_one_scores(e.confusion);
  return e;
}

MetricsReport summarize(std::span<const GraphEvaluation> graphs) {
  MetricsReport r;
  r.graph_count = graphs.size();
  r.graphs.assign(graphs.begin(), graphs.end());
  if (graphs.empty()) return r;
  double weight = 0.0;
  double exact = 0.0;
  double size_error = 0.0;
  for (const auto& g : graphs) {
    const auto w = static_cast<double>(g.n);
    weight += w;
    r.f1 += w * g.scores.f1;
    r.precision += w * g.scores.precision;
    r.recall += w * g.scores.recall;
    if (g.n == g.n_hat) exact += 1.0;
    size_error += std::abs(static_cast<double>(g.n_hat) - static_cast<double>(g.n));
  }
  r.f1 /= weight;
  r.precision /= weight;
  r.recall /= weight;
  const auto count = static_cast<double>(graphs.size());
  r.size_accuracy = exact / count;
  r.mean_size_error = (size_error / count) / (weight / count);
  return r;
}

MetricsReport evaluate(std::span<const CanonicalGraph> graphs, const ModelParams& params, const DecodeOptions& options,
                       std::size_t threads) {
  std::vector<GraphEvaluation> results(graphs.size());
  const auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t k = begin; k < graphs.size(); k += stride) {
      const PatchGrid grid = to_patch_grid(graphs[k], params.config().l);
      const EncodeTrace trace = encode(grid, params);
      const DecodeResult decoded = decode(trace.root, params, options);
      results[k] = evaluate_pair(graphs[k].graph, decoded.a_hat);
      results[k].truncated = decoded.truncated;
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, graphs.size()));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  return summarize(results);
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& g : graphs) {
    rows.push_back({{"n", g.n},
                    {"n_hat", g.n_hat},
                    {"truncated", g.truncated},
                    {"tp", g.confusion.tp},
                    {"fp", g.confusion.fp},
                    {"fn", g.confusion.fn},
                    {"tn", g.confusion.tn},
                    {"precision", g.scores.precision},
                    {"recall", g.scores.recall},
                    {"f1", g.scores.f1}});
  }
  return {{"graph_count", graph_count},
          {"f1", f1},
          {"precision", precision},
          {"recall", recall},
          {"size_accuracy", size_accuracy},
          {"mean_size_error", mean_size_error},
          {"graphs", rows}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.graph_count = j.at("graph_count").get<std::size_t>();
  r.f1 = j.at("f1").get<double>();
  r.precision = j.at("precision").get<double>();
  r.recall = j.at("recall").get<double>();
  r.size_accuracy = j.at("size_accuracy").get<double>();
  r.mean_size_error = j.at("mean_size_error").get<double>();
  for (const auto& row : j.at("graphs")) {
    GraphEvaluation g;
    g.n = row.at("n").get<std::size_t>();
    g.n_hat = row.at("n_hat").get<std::size_t>();
    g.truncated = row.at("truncated").get<bool>();
    g.confusion = {row.at("tp").get<std::size_t>(), row.at("fp").get<std::size_t>(), row.at("fn").get<std::size_t>(),
                   row.at("tn").get<std::size_t>()};
    g.scores = {row.at("precision").get<double>(), row.at("recall").get<double>(), row.at("f1").get<double>()};
    r.graphs.push_back(g);
  }
  return r;
}

namespace {

MetricSummary summary_of(std::span<const MetricsReport> reports, double MetricsReport::*field) {
  MetricSummary s;
  if (reports.empty()) return s;
  for (const auto& r : reports) s.mean += r.*field;
  s.mean /= static_cast<double>(reports.size());
  if (reports.size() > 1) {
    double var = 0.0;
    for (const auto& r : reports) var += (r.*field - s.mean) * (r.*field - s.mean);
    s.std = std::sqrt(var / static_cast<double>(reports.size() - 1));
  }
  return s;
}

nlohmann::json summary_json(const MetricSummary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

AggregateReport aggregate(std::span<const MetricsReport> reports) {
  AggregateReport a;
  a.runs = reports.size();
  a.f1 = summary_of(reports, &MetricsReport::f1);
  a.precision = summary_of(reports, &MetricsReport::precision);
  a.recall = summary_of(reports, &MetricsReport::recall);
  a.size_accuracy = summary_of(reports, &MetricsReport::size_accuracy);
  a.mean_size_error = summary_of(reports, &MetricsReport::mean_size_error);
  return a;
}

nlohmann::json AggregateReport::to_json() const {
  return {{"runs", runs},
          {"f1", summary_json(f1)},
          {"precision", summary_json(precision)},
          {"recall", summary_json(recall)},
          {"size_accuracy", summary_json(size_accuracy)},
          {"mean_size_error", summary_json(mean_size_error)}};
}

}  // namespace regae

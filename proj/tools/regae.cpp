// regae: command-line front end for the recursive graph autoencoder.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "regae/checkpoint.hpp"
#include "regae/codec.hpp"
#include "regae/config.hpp"
#include "regae/datasets.hpp"
#include "regae/metrics.hpp"
#include "regae/patch.hpp"
#include "regae/train.hpp"

namespace fs = std::filesystem;
using namespace regae;

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::size_t seeds = 1;
  std::string out;
  std::size_t threads = 1;
  std::string checkpoint;
  std::string input;
  bool verbose = false;
};

RunConfig resolve_config(const Options& o) {
  if (!o.config.empty() && !o.preset.empty()) throw ConfigError("give either --config or --preset, not both");
  RunConfig c;
  if (!o.config.empty()) {
    c = load_run_config(o.config);
  } else if (!o.preset.empty()) {
    c = preset(o.preset);
  }
  if (o.seed) c.seed = *o.seed;
  c.validate();
  return c;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("cannot write " + path.string());
}

std::vector<CanonicalGraph> canonicalize(const std::vector<Graph>& graphs) {
  std::vector<CanonicalGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(canonical_order(g));
  return out;
}

struct LoadedModel {
  RunConfig config;
  ModelParams params;
};

LoadedModel load_model(const std::string& path, const std::optional<RunConfig>& expected) {
  if (path.empty()) throw ConfigError("--checkpoint is required");
  const CheckpointData data = load_checkpoint(path);
  RunConfig config;
  try {
    config = RunConfig::from_json(nlohmann::json::parse(data.config_snapshot));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": unreadable config snapshot: " + e.what());
  }
  if (expected && (expected->m != config.m || expected->l != config.l)) {
    throw ConfigError("checkpoint has m = " + std::to_string(config.m) + ", l = " + std::to_string(config.l) +
                      " but the config asks for m = " + std::to_string(expected->m) +
                      ", l = " + std::to_string(expected->l));
  }
  ModelParams params(config.cell_config(), 0);
  params.load(data);
  return {config, std::move(params)};
}

std::optional<RunConfig> optional_config(const Options& o) {
  if (o.config.empty() && o.preset.empty()) return std::nullopt;
  return resolve_config(o);
}

void print_report(const MetricsReport& report) {
  std::printf("%6s %6s %6s %9s\n", "graph", "n", "n_hat", "f1");
  for (std::size_t k = 0; k < report.graphs.size(); ++k) {
    const auto& g = report.graphs[k];
    std::printf("%6zu %6zu %6zu %9.4f%s\n", k, g.n, g.n_hat, g.scores.f1, g.truncated ? "  truncated" : "");
  }
  std::printf("graphs %zu  f1 %.4f  precision %.4f  recall %.4f  size_accuracy %.4f  mean_size_error %.4f\n",
              report.graph_count, report.f1, report.precision, report.recall, report.size_accuracy,
              report.mean_size_error);
}

int cmd_gen_grids(const Options& o) {
  const fs::path out = o.out.empty() ? fs::path("grids") : fs::path(o.out);
  ensure_dir(out);
  std::vector<Graph> graphs;
  for (std::size_t p = 2; p <= 8; ++p) {
    for (std::size_t q = 2; q <= 8; ++q) {
      graphs.push_back(grid_graph(p, q));
      save_edge_list(out / ("grid_" + std::to_string(p) + "x" + std::to_string(q) + ".txt"), graphs.back());
    }
  }
  const DatasetStats s = dataset_stats(graphs);
  const nlohmann::json j{{"count", s.count},
                         {"avg_nodes", s.avg_nodes},
                         {"max_nodes", s.max_nodes},
                         {"avg_edges", s.avg_edges},
                         {"fill", s.fill}};
  write_text(out / "stats.json", j.dump(2) + "\n");
  std::printf("graphs %zu  avg nodes %.1f  max nodes %zu  avg edges %.1f\n", s.count, s.avg_nodes, s.max_nodes,
              s.avg_edges);
  return 0;
}

struct SeedRun {
  std::uint64_t seed = 0;
  MetricsReport report;
};

SeedRun train_one(RunConfig config, const std::vector<Graph>& graphs, const fs::path& dir, std::size_t threads,
                  bool verbose) {
  ensure_dir(dir);
  const DatasetSplit split = split_dataset(graphs, config.split_ratios, config.augmentation, config.seed);
  config.max_blocks = config.decode_options(split.train).max_blocks;
  write_text(dir / "config.json", config.to_json().dump(2) + "\n");
  write_text(dir / "split.json", split.manifest.to_json().dump(2) + "\n");

  std::ofstream history(dir / "history.jsonl", std::ios::binary);
  if (!history) throw DataError("cannot write " + (dir / "history.jsonl").string());
  const std::string run_id = "seed-" + std::to_string(config.seed);
  const TrainResult result = train(split, config.train_config(), [&](const EpochRecord& r, const ModelParams&) {
    nlohmann::json line = r.to_json();
    line["run"] = run_id;
    line["seed"] = config.seed;
    history << line.dump() << '\n';
    history.flush();
    if (verbose || r.epoch % 50 == 0) {
      std::fprintf(stderr, "[%s] epoch %zu  train %.6f  valid %.6f  f1 %.4f  fraction %.2f\n", run_id.c_str(),
                   r.epoch, r.train_loss, r.valid_loss, r.train_f1, r.fraction);
    }
  });

  const auto handles = result.params.parameters();
  save_checkpoint(dir / "checkpoint.bin", handles, config.to_json().dump());

  const std::vector<CanonicalGraph>& eval_set = split.test.empty() ? split.train : split.test;
  SeedRun run;
  run.seed = config.seed;
  run.report = evaluate(eval_set, result.params, config.decode_options(split.train), threads);
  write_text(dir / "report.json", run.report.to_json().dump(2) + "\n");
  std::fprintf(stderr, "[%s] best epoch %zu  valid loss %.6f  test f1 %.4f  size_accuracy %.4f\n", run_id.c_str(),
               result.best_epoch, result.best_valid_loss, run.report.f1, run.report.size_accuracy);
  return run;
}

int cmd_train(const Options& o) {
  const RunConfig config = resolve_config(o);
  if (o.seeds == 0) throw ConfigError("--seeds must be positive");
  const std::vector<Graph> graphs = load_dataset(config.dataset);
  const fs::path out = o.out.empty() ? fs::path("run") : fs::path(o.out);
  ensure_dir(out);

  if (o.seeds == 1) {
    train_one(config, graphs, out, o.threads, o.verbose);
    return 0;
  }
  std::vector<SeedRun> runs(o.seeds);
  std::vector<std::exception_ptr> errors(o.seeds);
  const auto work = [&](std::size_t k) {
    try {
      RunConfig c = config;
      c.seed = config.seed + k;
      runs[k] = train_one(c, graphs, out / ("seed-" + std::to_string(c.seed)), 1, o.verbose);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  };
  // Seeds are independent, so running them side by side keeps each one deterministic.
  const std::size_t workers = std::max<std::size_t>(1, std::min(o.threads, o.seeds));
  for (std::size_t begin = 0; begin < o.seeds; begin += workers) {
    std::vector<std::thread> pool;
    for (std::size_t k = begin; k < std::min(o.seeds, begin + workers); ++k) pool.emplace_back(work, k);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<MetricsReport> reports;
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& r : runs) {
    reports.push_back(r.report);
    seeds.push_back(r.seed);
  }
  const AggregateReport agg = aggregate(reports);
  nlohmann::json j = agg.to_json();
  j["seeds"] = seeds;
  write_text(out / "aggregate.json", j.dump(2) + "\n");
  std::printf("runs %zu  f1 %.4f +- %.4f  size_accuracy %.4f +- %.4f  mean_size_error %.4f +- %.4f\n", agg.runs,
              agg.f1.mean, agg.f1.std, agg.size_accuracy.mean, agg.size_accuracy.std, agg.mean_size_error.mean,
              agg.mean_size_error.std);
  return 0;
}

int cmd_roundtrip(const Options& o) {
  const LoadedModel model = load_model(o.checkpoint, optional_config(o));
  if (o.input.empty()) throw ConfigError("--graphs is required");
  const std::vector<CanonicalGraph> graphs = canonicalize(load_dataset(o.input));
  const MetricsReport report =
      evaluate(graphs, model.params, model.config.decode_options(std::span<const CanonicalGraph>()), o.threads);
  print_report(report);
  if (!o.out.empty()) write_text(o.out, report.to_json().dump(2) + "\n");
  return 0;
}

int cmd_eval(const Options& o) {
  const LoadedModel model = load_model(o.checkpoint, optional_config(o));
  const RunConfig& config = model.config;
  const DatasetSplit split =
      split_dataset(load_dataset(config.dataset), config.split_ratios, config.augmentation, config.seed);
  const MetricsReport report =
      evaluate(split.test, model.params, config.decode_options(std::span<const CanonicalGraph>()), o.threads);
  print_report(report);
  if (!o.out.empty()) write_text(o.out, report.to_json().dump(2) + "\n");
  return 0;
}

int cmd_encode(const Options& o) {
  const LoadedModel model = load_model(o.checkpoint, optional_config(o));
  if (o.input.empty()) throw ConfigError("--graph is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  const CanonicalGraph g = canonical_order(load_edge_list(o.input));
  const EncodeTrace trace = encode(to_patch_grid(g, model.config.l), model.params);
  save_embedding(o.out, trace.root);
  std::printf("n %zu  blocks %zu  m %zu\n", g.vertex_count(), trace.n_blocks, trace.root.size());
  return 0;
}

int cmd_decode(const Options& o) {
  const LoadedModel model = load_model(o.checkpoint, optional_config(o));
  if (o.input.empty()) throw ConfigError("--embedding is required");
  if (o.out.empty()) throw ConfigError("--out is required");
  const std::vector<Real> x = load_embedding(o.input);
  if (x.size() != model.config.m) {
    throw DataError(o.input + ": embedding has " + std::to_string(x.size()) + " values, model expects m = " +
                    std::to_string(model.config.m));
  }
  const DecodeResult result =
      decode(x, model.params, model.config.decode_options(std::span<const CanonicalGraph>()));
  save_edge_list(o.out, result.a_hat);
  std::printf("n_hat %zu  blocks %zu  edges %zu  truncated %s\n", result.n_hat, result.n_blocks,
              result.a_hat.edge_count(), result.truncated ? "true" : "false");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recursive graph autoencoder"};
  app.require_subcommand(1);
  Options o;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON run configuration");
    cmd->add_option("--preset", o.preset, "built-in configuration name");
  };
  const auto add_threads = [&](CLI::App* cmd) {
    cmd->add_option("--threads", o.threads, "worker threads for evaluation")->check(CLI::PositiveNumber);
  };

  auto* gen = app.add_subcommand("gen-grids", "write the 49 grid graphs and their statistics");
  gen->add_option("--out", o.out, "output directory");

  auto* tr = app.add_subcommand("train", "train a model and evaluate it on the test subset");
  add_config(tr);
  tr->add_option("--seed", o.seed, "override the configured seed");
  tr->add_option("--seeds", o.seeds, "repeat with this many consecutive seeds");
  tr->add_option("--out", o.out, "output directory");
  tr->add_flag("--verbose", o.verbose, "log every epoch");
  add_threads(tr);

  auto* rt = app.add_subcommand("roundtrip", "encode and decode graphs, then score the reconstructions");
  add_config(rt);
  rt->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  rt->add_option("--graphs", o.input, "edge-list file, directory or dataset name")->required();
  rt->add_option("--out", o.out, "report file (JSON)");
  add_threads(rt);

  auto* ev = app.add_subcommand("eval", "score the test subset of the checkpoint's own dataset split");
  add_config(ev);
  ev->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  ev->add_option("--out", o.out, "report file (JSON)");
  add_threads(ev);

  auto* enc = app.add_subcommand("encode", "write the embedding of one graph");
  add_config(enc);
  enc->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  enc->add_option("--graph", o.input, "edge-list file")->required();
  enc->add_option("--out", o.out, "embedding file")->required();

  auto* dec = app.add_subcommand("decode", "reconstruct a graph from an embedding");
  add_config(dec);
  dec->add_option("--checkpoint", o.checkpoint, "trained checkpoint")->required();
  dec->add_option("--embedding", o.input, "embedding file")->required();
  dec->add_option("--out", o.out, "edge-list file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(gen)) return cmd_gen_grids(o);
    if (app.got_subcommand(tr)) return cmd_train(o);
    if (app.got_subcommand(rt)) return cmd_roundtrip(o);
    if (app.got_subcommand(ev)) return cmd_eval(o);
    if (app.got_subcommand(enc)) return cmd_encode(o);
    if (app.got_subcommand(dec)) return cmd_decode(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

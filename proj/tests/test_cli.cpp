#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "regae/codec.hpp"
#include "regae/config.hpp"
#include "regae/datasets.hpp"
#include "regae/metrics.hpp"

using namespace regae;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "regae_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

// Runs the CLI with `args`, stdout and stderr captured in `log`; returns the exit code.
int run(const std::string& args, const std::string& log = "last.log") {
  const std::string cmd = std::string(REGAE_CLI_PATH) + " " + args + " > " + (work_dir() / log).string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// The desk model is trained once and shared by the tests that need it.
const fs::path& desk_run() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "desk";
    REQUIRE(run("train --preset desk --out " + d.string(), "desk.log") == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("every preset parses and validates") {
  CHECK(preset_names().size() == 9);
  for (const auto& name : preset_names()) {
    CAPTURE(name);
    const RunConfig c = preset(name);
    CHECK_NOTHROW(c.validate());
    CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());
  }
}

TEST_CASE("grid-medium preset carries the published values") {
  const RunConfig c = preset("grid-medium");
  CHECK(c.m == 200);
  CHECK(c.encoder_hidden == std::vector<std::size_t>{2048});
  CHECK(c.decoder_hidden == std::vector<std::size_t>{2048});
  CHECK(c.l == 4);
  CHECK(c.lr == doctest::Approx(3e-4));
  CHECK(c.grad_clip == 1.0);
  CHECK(c.rpb == doctest::Approx(0.3));
  CHECK(c.batch == 32);
}

TEST_CASE("config files reject unknown keys and bad values with exit code 2") {
  const fs::path bad_key = work_dir() / "bad_key.json";
  write_text(bad_key, R"({"preset": "desk", "learning_rate": 0.1})");
  CHECK(run("train --config " + bad_key.string() + " --out " + (work_dir() / "never").string()) == 2);
  CHECK(slurp(work_dir() / "last.log").find("learning_rate") != std::string::npos);

  const fs::path bad_value = work_dir() / "bad_value.json";
  write_text(bad_value, R"({"m": 7})");
  CHECK(run("train --config " + bad_value.string() + " --out " + (work_dir() / "never").string()) == 2);
  CHECK(slurp(work_dir() / "last.log").find("m") != std::string::npos);

  CHECK(run("train --preset no-such-preset") == 2);
  CHECK(run("train --preset desk --config " + bad_key.string()) == 2);
  CHECK(run("no-such-command") == 2);
}

TEST_CASE("gen-grids writes the grid set idempotently") {
  const fs::path out = work_dir() / "grids";
  REQUIRE(run("gen-grids --out " + out.string()) == 0);
  const nlohmann::json stats = read_json(out / "stats.json");
  CHECK(stats["count"] == 49);
  CHECK(stats["avg_nodes"].get<double>() == 25.0);
  CHECK(stats["max_nodes"] == 64);
  CHECK(stats["avg_edges"].get<double>() == 40.0);

  const std::string first = slurp(out / "grid_3x5.txt") + slurp(out / "stats.json");
  REQUIRE(run("gen-grids --out " + out.string()) == 0);
  CHECK(first == slurp(out / "grid_3x5.txt") + slurp(out / "stats.json"));

  for (std::size_t p = 2; p <= 8; ++p) {
    for (std::size_t q = 2; q <= 8; ++q) {
      const Graph g = load_edge_list(out / ("grid_" + std::to_string(p) + "x" + std::to_string(q) + ".txt"));
      CHECK(g.vertex_count() == p * q);
      CHECK(g.edge_count() == p * (q - 1) + q * (p - 1));
    }
  }
}

TEST_CASE("desk training writes its artifacts and memorizes the set") {
  const fs::path& d = desk_run();
  for (const char* f : {"config.json", "split.json", "history.jsonl", "checkpoint.bin", "report.json"}) {
    CAPTURE(f);
    CHECK(fs::exists(d / f));
  }
  const RunConfig c = load_run_config(d / "config.json");
  CHECK(c.m == 32);
  CHECK(c.max_blocks > 0);
  const MetricsReport r = MetricsReport::from_json(read_json(d / "report.json"));
  CHECK(r.graph_count == 5);
  CHECK(r.f1 == 1.0);
  CHECK(r.size_accuracy == 1.0);

  std::ifstream history(d / "history.jsonl");
  std::string line;
  std::size_t lines = 0;
  while (std::getline(history, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("train_loss"));
    CHECK(j.contains("valid_loss"));
    ++lines;
  }
  CHECK(lines > 0);
}

TEST_CASE("roundtrip on the memorized set") {
  const fs::path& d = desk_run();
  const fs::path report = work_dir() / "roundtrip.json";
  REQUIRE(run("roundtrip --checkpoint " + (d / "checkpoint.bin").string() + " --graphs memorize5 --out " +
              report.string()) == 0);
  const MetricsReport r = MetricsReport::from_json(read_json(report));
  CHECK(r.f1 == 1.0);
  CHECK(r.size_accuracy == 1.0);
  CHECK(MetricsReport::from_json(r.to_json()).to_json() == r.to_json());
  CHECK(slurp(work_dir() / "last.log").find("n_hat") != std::string::npos);
}

TEST_CASE("roundtrip of an empty directory gives an empty report") {
  const fs::path empty = work_dir() / "empty";
  fs::create_directories(empty);
  const fs::path report = work_dir() / "empty_report.json";
  REQUIRE(run("roundtrip --checkpoint " + (desk_run() / "checkpoint.bin").string() + " --graphs " + empty.string() +
              " --out " + report.string()) == 0);
  CHECK(MetricsReport::from_json(read_json(report)).graph_count == 0);
}

TEST_CASE("encode then decode reproduces each memorized graph in canonical order") {
  const fs::path& d = desk_run();
  const auto graphs = memorization_set();
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const CanonicalGraph c = canonical_order(graphs[k]);
    const fs::path in = work_dir() / ("g" + std::to_string(k) + ".txt");
    const fs::path emb = work_dir() / ("g" + std::to_string(k) + ".emb");
    const fs::path out = work_dir() / ("g" + std::to_string(k) + "_decoded.txt");
    save_edge_list(in, c.graph);
    REQUIRE(run("encode --checkpoint " + (d / "checkpoint.bin").string() + " --graph " + in.string() + " --out " +
                emb.string()) == 0);
    CHECK(fs::file_size(emb) == 4 + 4 * 32);
    CHECK(load_embedding(emb).size() == 32);
    REQUIRE(run("decode --checkpoint " + (d / "checkpoint.bin").string() + " --embedding " + emb.string() +
                " --out " + out.string()) == 0);
    CHECK(slurp(out) == slurp(in));
    CHECK(slurp(work_dir() / "last.log").find("truncated false") != std::string::npos);
  }
}

TEST_CASE("decode rejects embeddings of the wrong length and terminates on zeros") {
  const fs::path& d = desk_run();
  const fs::path short_emb = work_dir() / "short.emb";
  save_embedding(short_emb, std::vector<Real>(5, 0));
  CHECK(run("decode --checkpoint " + (d / "checkpoint.bin").string() + " --embedding " + short_emb.string() +
            " --out " + (work_dir() / "x.txt").string()) == 3);

  // An untrained model on the zero vector: the block cap bounds the decoder.
  const fs::path cfg = work_dir() / "untrained.json";
  write_text(cfg, R"({"preset": "desk", "max_epochs": 1, "max_blocks": 6})");
  const fs::path u = work_dir() / "untrained";
  REQUIRE(run("train --config " + cfg.string() + " --out " + u.string()) == 0);
  const fs::path zero = work_dir() / "zero.emb";
  save_embedding(zero, std::vector<Real>(32, 0));
  const fs::path out = work_dir() / "zero_decoded.txt";
  REQUIRE(run("decode --checkpoint " + (u / "checkpoint.bin").string() + " --embedding " + zero.string() +
              " --out " + out.string()) == 0);
  const std::string log = slurp(work_dir() / "last.log");
  CHECK(log.find("n_hat") != std::string::npos);
  CHECK(load_edge_list(out).vertex_count() <= 6);
}

TEST_CASE("a checkpoint used with a mismatched configuration fails with exit code 2") {
  const fs::path cfg = work_dir() / "m64.json";
  write_text(cfg, R"({"preset": "desk", "m": 64})");
  CHECK(run("roundtrip --config " + cfg.string() + " --checkpoint " + (desk_run() / "checkpoint.bin").string() +
            " --graphs memorize5") == 2);
  CHECK(run("roundtrip --checkpoint " + (work_dir() / "missing.bin").string() + " --graphs memorize5") == 3);
}

TEST_CASE("several seeds give one history per seed and an aggregate") {
  const fs::path cfg = work_dir() / "short.json";
  write_text(cfg, R"({"preset": "desk", "max_epochs": 3, "split_ratios": [0.6, 0.2, 0.2]})");
  const fs::path out = work_dir() / "seeds";
  REQUIRE(run("train --config " + cfg.string() + " --seeds 3 --seed 10 --out " + out.string()) == 0);
  for (int s = 10; s < 13; ++s) {
    CAPTURE(s);
    CHECK(fs::exists(out / ("seed-" + std::to_string(s)) / "history.jsonl"));
  }
  const nlohmann::json agg = read_json(out / "aggregate.json");
  CHECK(agg["runs"] == 3);
  CHECK(agg["seeds"] == nlohmann::json::array({10, 11, 12}));
}

TEST_CASE("training is reproducible from the config snapshot") {
  const fs::path cfg = work_dir() / "repro.json";
  write_text(cfg, R"({"preset": "desk", "max_epochs": 20, "batch": 2})");
  const fs::path a = work_dir() / "repro_a";
  const fs::path b = work_dir() / "repro_b";
  REQUIRE(run("train --config " + cfg.string() + " --out " + a.string()) == 0);
  REQUIRE(run("train --config " + (a / "config.json").string() + " --out " + b.string()) == 0);
  CHECK(slurp(a / "history.jsonl") == slurp(b / "history.jsonl"));
  CHECK(slurp(a / "checkpoint.bin") == slurp(b / "checkpoint.bin"));
}

TEST_CASE("eval rebuilds the split from the checkpoint") {
  const fs::path cfg = work_dir() / "evalcfg.json";
  write_text(cfg, R"({"preset": "desk", "max_epochs": 2, "split_ratios": [0.6, 0.2, 0.2]})");
  const fs::path d = work_dir() / "evalrun";
  REQUIRE(run("train --config " + cfg.string() + " --out " + d.string()) == 0);
  const fs::path report = work_dir() / "eval.json";
  REQUIRE(run("eval --checkpoint " + (d / "checkpoint.bin").string() + " --out " + report.string()) == 0);
  CHECK(read_json(report) == read_json(d / "report.json"));
}

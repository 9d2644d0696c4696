#include "regae/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>

namespace regae {

namespace {

using Json = nlohmann::json;

std::size_t as_count(const Json& v, const std::string& key) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    throw ConfigError(key + ": expected a non-negative integer");
  }
  return v.get<std::size_t>();
}

double as_real(const Json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(key + ": expected a finite number");
  return x;
}

bool as_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) throw ConfigError(key + ": expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError(key + ": expected a string");
  return v.get<std::string>();
}

std::vector<std::size_t> as_counts(const Json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError(key + ": expected an array of integers");
  std::vector<std::size_t> out;
  for (const auto& x : v) out.push_back(as_count(x, key));
  return out;
}

using Setter = std::function<void(RunConfig&, const Json&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table{
      {"dataset", [](RunConfig& c, const Json& v, const std::string& k) { c.dataset = as_string(v, k); }},
      {"m", [](RunConfig& c, const Json& v, const std::string& k) { c.m = as_count(v, k); }},
      {"l", [](RunConfig& c, const Json& v, const std::string& k) { c.l = as_count(v, k); }},
      {"encoder_hidden", [](RunConfig& c, const Json& v, const std::string& k) { c.encoder_hidden = as_counts(v, k); }},
      {"decoder_hidden", [](RunConfig& c, const Json& v, const std::string& k) { c.decoder_hidden = as_counts(v, k); }},
      {"lr", [](RunConfig& c, const Json& v, const std::string& k) { c.lr = as_real(v, k); }},
      {"adam_beta1", [](RunConfig& c, const Json& v, const std::string& k) { c.adam_beta1 = as_real(v, k); }},
      {"adam_beta2", [](RunConfig& c, const Json& v, const std::string& k) { c.adam_beta2 = as_real(v, k); }},
      {"adam_eps", [](RunConfig& c, const Json& v, const std::string& k) { c.adam_eps = as_real(v, k); }},
      {"batch", [](RunConfig& c, const Json& v, const std::string& k) { c.batch = as_count(v, k); }},
      {"grad_clip", [](RunConfig& c, const Json& v, const std::string& k) { c.grad_clip = as_real(v, k); }},
      {"rpb", [](RunConfig& c, const Json& v, const std::string& k) { c.rpb = as_real(v, k); }},
      {"mask_weight", [](RunConfig& c, const Json& v, const std::string& k) { c.mask_weight = as_real(v, k); }},
      {"emb_norm_weight", [](RunConfig& c, const Json& v, const std::string& k) { c.emb_norm_weight = as_real(v, k); }},
      {"size_exponent", [](RunConfig& c, const Json& v, const std::string& k) { c.size_exponent = as_real(v, k); }},
      {"emb_norm_scope", [](RunConfig& c, const Json& v, const std::string& k) { c.emb_norm_scope = as_string(v, k); }},
      {"vae", [](RunConfig& c, const Json& v, const std::string& k) { c.vae = as_bool(v, k); }},
      {"kl_weight", [](RunConfig& c, const Json& v, const std::string& k) { c.kl_weight = as_real(v, k); }},
      {"sample_noise", [](RunConfig& c, const Json& v, const std::string& k) { c.sample_noise = as_bool(v, k); }},
      {"patience", [](RunConfig& c, const Json& v, const std::string& k) { c.patience = as_count(v, k); }},
      {"max_epochs", [](RunConfig& c, const Json& v, const std::string& k) { c.max_epochs = as_count(v, k); }},
      {"target_loss", [](RunConfig& c, const Json& v, const std::string& k) { c.target_loss = as_real(v, k); }},
      {"seed", [](RunConfig& c, const Json& v, const std::string& k) { c.seed = as_count(v, k); }},
      {"split_ratios",
       [](RunConfig& c, const Json& v, const std::string& k) {
         if (!v.is_array() || v.size() != 3) throw ConfigError(k + ": expected an array of three numbers");
         for (std::size_t i = 0; i < 3; ++i) c.split_ratios[i] = as_real(v[i], k);
       }},
      {"augmentation", [](RunConfig& c, const Json& v, const std::string& k) { c.augmentation = as_count(v, k); }},
      {"curriculum_fraction",
       [](RunConfig& c, const Json& v, const std::string& k) { c.curriculum_fraction = as_real(v, k); }},
      {"curriculum_threshold",
       [](RunConfig& c, const Json& v, const std::string& k) { c.curriculum_threshold = as_real(v, k); }},
      {"curriculum_step", [](RunConfig& c, const Json& v, const std::string& k) { c.curriculum_step = as_real(v, k); }},
      {"curriculum_min_size",
       [](RunConfig& c, const Json& v, const std::string& k) { c.curriculum_min_size = as_count(v, k); }},
      {"max_blocks", [](RunConfig& c, const Json& v, const std::string& k) { c.max_blocks = as_count(v, k); }},
      {"stop_rule", [](RunConfig& c, const Json& v, const std::string& k) { c.stop_rule = as_string(v, k); }},
      {"threshold", [](RunConfig& c, const Json& v, const std::string& k) { c.threshold = as_real(v, k); }},
  };
  return table;
}

StopRule parse_stop_rule(const std::string& s) {
  if (s == "target_consistent") return StopRule::target_consistent;
  if (s == "verbatim") return StopRule::verbatim;
  throw ConfigError("stop_rule: expected \"target_consistent\" or \"verbatim\", got \"" + s + "\"");
}

EmbNormScope parse_scope(const std::string& s) {
  if (s == "root") return EmbNormScope::root;
  if (s == "diagonal") return EmbNormScope::diagonal;
  throw ConfigError("emb_norm_scope: expected \"root\" or \"diagonal\", got \"" + s + "\"");
}

}  // namespace

void RunConfig::validate() const {
  if (dataset.empty()) throw ConfigError("dataset: must not be empty");
  if (m == 0 || m % 2 != 0) throw ConfigError("m: must be a positive even integer");
  if (l == 0) throw ConfigError("l: must be positive");
  for (std::size_t w : encoder_hidden) {
    if (w == 0) throw ConfigError("encoder_hidden: layer widths must be positive");
  }
  for (std::size_t w : decoder_hidden) {
    if (w == 0) throw ConfigError("decoder_hidden: layer widths must be positive");
  }
  if (!(lr > 0)) throw ConfigError("lr: must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1)) throw ConfigError("adam_beta1: must lie in [0, 1)");
  if (!(adam_beta2 >= 0 && adam_beta2 < 1)) throw ConfigError("adam_beta2: must lie in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("adam_eps: must be positive");
  if (batch == 0) throw ConfigError("batch: must be positive");
  if (!(grad_clip > 0)) throw ConfigError("grad_clip: must be positive");
  if (!(rpb > 0 && rpb < 1)) throw ConfigError("rpb: must lie in (0, 1)");
  if (mask_weight < 0) throw ConfigError("mask_weight: must be non-negative");
  if (emb_norm_weight < 0) throw ConfigError("emb_norm_weight: must be non-negative");
  if (size_exponent < 0) throw ConfigError("size_exponent: must be non-negative");
  if (kl_weight < 0) throw ConfigError("kl_weight: must be non-negative");
  if (max_epochs == 0) throw ConfigError("max_epochs: must be positive");
  if (target_loss < 0) throw ConfigError("target_loss: must be non-negative");
  double ratio_sum = 0.0;
  for (double r : split_ratios) {
    if (r < 0) throw ConfigError("split_ratios: entries must be non-negative");
    ratio_sum += r;
  }
  if (std::abs(ratio_sum - 1.0) > 1e-9) throw ConfigError("split_ratios: entries must sum to 1");
  if (!(curriculum_fraction > 0 && curriculum_fraction <= 1)) {
    throw ConfigError("curriculum_fraction: must lie in (0, 1]");
  }
  if (!(curriculum_threshold >= 0 && curriculum_threshold <= 1)) {
    throw ConfigError("curriculum_threshold: must lie in [0, 1]");
  }
  if (!(curriculum_step > 0)) throw ConfigError("curriculum_step: must be positive");
  if (curriculum_min_size == 0) throw ConfigError("curriculum_min_size: must be positive");
  if (!(threshold > 0 && threshold < 1)) throw ConfigError("threshold: must lie in (0, 1)");
  parse_stop_rule(stop_rule);
  parse_scope(emb_norm_scope);
}

nlohmann::json RunConfig::to_json() const {
  return {{"dataset", dataset},
          {"m", m},
          {"l", l},
          {"encoder_hidden", encoder_hidden},
          {"decoder_hidden", decoder_hidden},
          {"lr", lr},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"batch", batch},
          {"grad_clip", grad_clip},
          {"rpb", rpb},
          {"mask_weight", mask_weight},
          {"emb_norm_weight", emb_norm_weight},
          {"size_exponent", size_exponent},
          {"emb_norm_scope", emb_norm_scope},
          {"vae", vae},
          {"kl_weight", kl_weight},
          {"sample_noise", sample_noise},
          {"patience", patience},
          {"max_epochs", max_epochs},
          {"target_loss", target_loss},
          {"seed", seed},
          {"split_ratios", split_ratios},
          {"augmentation", augmentation},
          {"curriculum_fraction", curriculum_fraction},
          {"curriculum_threshold", curriculum_threshold},
          {"curriculum_step", curriculum_step},
          {"curriculum_min_size", curriculum_min_size},
          {"max_blocks", max_blocks},
          {"stop_rule", stop_rule},
          {"threshold", threshold}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  RunConfig c;
  if (j.contains("preset")) {
    c = preset(as_string(j.at("preset"), "preset"));
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "preset") continue;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown config key: " + key);
    it->second(c, value, key);
  }
  c.validate();
  return c;
}

CellConfig RunConfig::cell_config() const {
  CellConfig cell;
  cell.m = m;
  cell.l = l;
  cell.encoder_hidden = encoder_hidden;
  cell.decoder_hidden = decoder_hidden;
  cell.variational = vae;
  return cell;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.cell = cell_config();
  t.weights.rpb = static_cast<Real>(rpb);
  t.weights.mask_weight = static_cast<Real>(mask_weight);
  t.weights.emb_norm_weight = static_cast<Real>(emb_norm_weight);
  t.weights.size_exponent = static_cast<Real>(size_exponent);
  t.weights.kl_weight = static_cast<Real>(kl_weight);
  t.emb_norm_scope = parse_scope(emb_norm_scope);
  t.adam.lr = static_cast<Real>(lr);
  t.adam.beta1 = static_cast<Real>(adam_beta1);
  t.adam.beta2 = static_cast<Real>(adam_beta2);
  t.adam.eps = static_cast<Real>(adam_eps);
  t.grad_clip = static_cast<Real>(grad_clip);
  t.batch = batch;
  t.patience = patience;
  t.max_epochs = max_epochs;
  t.target_loss = target_loss;
  t.sample_noise = sample_noise;
  t.curriculum.fraction = curriculum_fraction;
  t.curriculum.threshold = curriculum_threshold;
  t.curriculum.step = curriculum_step;
  t.curriculum.min_size = curriculum_min_size;
  t.seed = seed;
  return t;
}

DecodeOptions RunConfig::decode_options(std::span<const CanonicalGraph> training) const {
  DecodeOptions d;
  d.stop_rule = parse_stop_rule(stop_rule);
  d.threshold = static_cast<Real>(threshold);
  if (max_blocks > 0) {
    d.max_blocks = max_blocks;
  } else {
    std::size_t largest = 1;
    for (const auto& g : training) largest = std::max(largest, ceil_div(g.vertex_count(), l));
    d.max_blocks = 2 * largest;
  }
  return d;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return RunConfig::from_json(j);
}

void save_run_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << config.to_json().dump(2) << '\n';
}

std::vector<std::string> preset_names() {
  return {"grid-medium", "imdb-binary",      "imdb-multi", "collab", "reddit-binary", "reddit-multi-5k",
          "reddit-multi-12k", "desk", "desk-grid"};
}

namespace {

RunConfig published(std::string dataset, std::size_t m, std::vector<std::size_t> enc, std::vector<std::size_t> dec,
                    std::size_t l, double lr, double clip, double rpb, std::size_t batch, std::size_t augmentation) {
  RunConfig c;
  c.dataset = std::move(dataset);
  c.m = m;
  c.encoder_hidden = std::move(enc);
  c.decoder_hidden = std::move(dec);
  c.l = l;
  c.lr = lr;
  c.grad_clip = clip;
  c.rpb = rpb;
  c.batch = batch;
  c.augmentation = augmentation;
  c.patience = 20;
  c.mask_weight = 0.5;
  c.emb_norm_weight = 0.2;
  return c;
}

}  // namespace

RunConfig preset(const std::string& name) {
  if (name == "grid-medium") return published("grid-medium", 200, {2048}, {2048}, 4, 3e-4, 1.0, 0.3, 32, 99);
  if (name == "imdb-binary") {
    return published("tu:data/IMDB-BINARY", 160, {1024, 768}, {2048}, 4, 5e-4, 1.0, 0.5, 64, 9);
  }
  if (name == "imdb-multi") return published("tu:data/IMDB-MULTI", 104, {1024}, {2048}, 8, 5e-4, 1.0, 0.5, 64, 9);
  if (name == "collab") return published("tu:data/COLLAB", 604, {2048, 1536}, {4096}, 16, 3e-4, 0.5, 0.3, 32, 9);
  if (name == "reddit-binary") {
    return published("tu:data/REDDIT-BINARY", 1720, {4096}, {6144}, 64, 3e-4, 1.0, 0.03, 32, 0);
  }
  if (name == "reddit-multi-5k") {
    return published("tu:data/REDDIT-MULTI-5K", 2036, {4096}, {6144}, 64, 3e-4, 0.5, 0.03, 32, 0);
  }
  if (name == "reddit-multi-12k") {
    return published("tu:data/REDDIT-MULTI-12K", 1564, {4096}, {6144}, 64, 3e-4, 0.5, 0.03, 32, 0);
  }
  if (name == "desk") {
    RunConfig c;
    c.dataset = "memorize5";
    c.m = 32;
    c.l = 1;
    c.encoder_hidden = {64};
    c.decoder_hidden = {64};
    c.lr = 3e-4;
    c.rpb = 0.5;
    c.batch = 1;
    c.split_ratios = {1.0, 0.0, 0.0};
    c.curriculum_fraction = 1.0;
    c.patience = 2000;
    c.max_epochs = 2000;
    c.target_loss = 0.005;
    return c;
  }
  if (name == "desk-grid") {
    RunConfig c;
    c.dataset = "grid:2:4";
    c.m = 64;
    c.l = 2;
    c.encoder_hidden = {128};
    c.decoder_hidden = {128};
    c.lr = 3e-4;
    c.rpb = 0.5;
    c.batch = 8;
    c.augmentation = 20;
    c.curriculum_fraction = 0.125;
    c.curriculum_step = 0.125;
    c.curriculum_threshold = 0.95;
    c.patience = 20;
    c.max_epochs = 600;
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

std::vector<Graph> load_dataset(const std::string& reference) {
  if (reference == "grid-medium") return generate_grid_dataset(2, 8);
  if (reference == "memorize5") return memorization_set();
  if (reference.rfind("grid:", 0) == 0) {
    const auto colon = reference.find(':', 5);
    if (colon == std::string::npos) throw ConfigError("dataset: expected grid:<lo>:<hi>, got " + reference);
    std::size_t lo = 0, hi = 0;
    try {
      lo = std::stoul(reference.substr(5, colon - 5));
      hi = std::stoul(reference.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("dataset: expected grid:<lo>:<hi>, got " + reference);
    }
    if (lo == 0 || lo > hi) throw ConfigError("dataset: grid bounds must satisfy 1 <= lo <= hi");
    return generate_grid_dataset(lo, hi);
  }
  if (reference.rfind("tu:", 0) == 0) {
    const std::filesystem::path p(reference.substr(3));
    return load_tu_dataset(p.parent_path().empty() ? "." : p.parent_path(), p.filename().string()).graphs;
  }
  const std::filesystem::path p(reference);
  if (std::filesystem::is_directory(p)) return load_edge_list_dir(p);
  if (std::filesystem::is_regular_file(p)) return {load_edge_list(p)};
  throw DataError("dataset not found: " + reference);
}

}  // namespace regae

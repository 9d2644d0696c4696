#include "regae/cells.hpp"

#include <array>
#include <cmath>

namespace regae {

std::vector<std::size_t> CellConfig::border_hidden() const {
  std::vector<std::size_t> out;
  for (std::size_t w : decoder_hidden) out.push_back(std::max<std::size_t>(1, (w + 1) / 2));
  return out;
}

void CellConfig::validate() const {
  if (m == 0 || m % 2 != 0) throw ConfigError("m must be a positive even number, got " + std::to_string(m));
  if (l == 0) throw ConfigError("patch side l must be positive");
  for (std::size_t w : encoder_hidden) {
    if (w == 0) throw ConfigError("encoder hidden widths must be positive");
  }
  for (std::size_t w : decoder_hidden) {
    if (w == 0) throw ConfigError("decoder hidden widths must be positive");
  }
}

Mlp::Mlp(const std::string& prefix, std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
         std::mt19937_64& rng) {
  std::vector<std::size_t> widths{input};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output);
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    const std::size_t fan_in = widths[k];
    const std::size_t fan_out = widths[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    std::vector<Real> w(fan_in * fan_out);
    for (auto& v : w) v = static_cast<Real>(dist(rng));
    params_.emplace_back(prefix + "." + std::to_string(k) + ".weight", Tensor({fan_in, fan_out}, std::move(w)));
    params_.emplace_back(prefix + "." + std::to_string(k) + ".bias", Tensor::zeros({1, fan_out}));
  }
}

Var Mlp::forward(Tape& tape, Var x) const {
  Var h = x;
  for (std::size_t k = 0; k + 1 < params_.size(); k += 2) {
    h = linear(h, tape.parameter(params_[k]), tape.parameter(params_[k + 1]));
    if (k + 2 < params_.size()) h = elu(h);
  }
  return h;
}

std::size_t Mlp::input_size() const { return params_.empty() ? 0 : params_.front().tensor.shape[0]; }
std::size_t Mlp::output_size() const { return params_.empty() ? 0 : params_.back().tensor.shape[1]; }

ModelParams::ModelParams(const CellConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t m = config_.m;
  const std::size_t h = config_.half();
  const std::size_t a = config_.patch_area();
  std::mt19937_64 rng(seed);
  encoder_ = Mlp("encoder", 2 * m + a, config_.encoder_hidden, 3 * m, rng);
  decoder_ = Mlp("decoder", m, config_.decoder_hidden, 4 * h + 2 * a, rng);
  border_left_ = Mlp("border_left", h, config_.border_hidden(), 2 * h, rng);
  border_right_ = Mlp("border_right", h, config_.border_hidden(), 2 * h, rng);
  if (config_.variational) {
    variance_ = Mlp("variance", m, config_.encoder_hidden, m, rng);
    for (auto& v : variance_.parameters().back().tensor.values) v = static_cast<Real>(config_.initial_log_std);
  }
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  for (Mlp* net : {&encoder_, &decoder_, &border_left_, &border_right_, &variance_}) {
    for (auto& p : net->parameters()) out.push_back(&p);
  }
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  std::vector<const Parameter*> out;
  for (const Mlp* net : {&encoder_, &decoder_, &border_left_, &border_right_, &variance_}) {
    for (const auto& p : net->parameters()) out.push_back(&p);
  }
  return out;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->tensor.size();
  return n;
}

void ModelParams::load(const CheckpointData& data) {
  auto mine = parameters();
  if (mine.size() != data.parameters.size()) {
    throw DataError("checkpoint holds " + std::to_string(data.parameters.size()) + " parameters, model expects " +
                    std::to_string(mine.size()));
  }
  for (std::size_t i = 0; i < mine.size(); ++i) {
    const Parameter& src = data.parameters[i];
    if (src.name != mine[i]->name || src.tensor.shape != mine[i]->tensor.shape) {
      throw DataError("checkpoint parameter " + src.name + " " + shape_string(src.tensor.shape) +
                      " does not match model parameter " + mine[i]->name + " " + shape_string(mine[i]->tensor.shape));
    }
    *mine[i] = src;
  }
}

namespace {

Var gate(Var keep, Var logits, Var update) {
  // keep o s(z) + elu(update) o (1 - s(z))
  return add(mul(keep, sigmoid(logits)), mul(elu(update), sigmoid(scale(logits, Real(-1)))));
}

void require_width(const char* cell, Var v, std::size_t width) {
  if (v.size() != width) {
    throw ShapeError(std::string(cell) + ": expected " + std::to_string(width) + " values, got shape " +
                     shape_string(v.shape()));
  }
}

}  // namespace

Var encoder_cell(Tape& tape, const ModelParams& params, std::optional<Var> x0, std::optional<Var> x1, Var patch) {
  const std::size_t m = params.config().m;
  require_width("encoder_cell patch", patch, params.config().patch_area());
  Var zero;
  if (!x0 || !x1) zero = tape.constant(Tensor::zeros({1, m}));
  const Var left = x0 ? *x0 : zero;
  const Var right = x1 ? *x1 : zero;
  require_width("encoder_cell x0", left, m);
  require_width("encoder_cell x1", right, m);
  const std::array<Var, 3> inputs{left, right, patch};
  const Var out = params.encoder().forward(tape, concat(inputs));
  const std::array<std::size_t, 3> widths{m, m, m};
  const auto parts = split(out, widths);
  const Var& z0 = parts[0];
  const Var& z1 = parts[1];
  const Var& adjust = parts[2];
  const Var mix = add(mul(left, sigmoid(z0)), mul(right, sigmoid(scale(z0, Real(-1)))));
  return gate(mix, z1, adjust);
}

DecoderOutput decoder_cell(Tape& tape, const ModelParams& params, Var y) {
  const std::size_t h = params.config().half();
  const std::size_t a = params.config().patch_area();
  require_width("decoder_cell", y, 2 * h);
  const Var out = params.decoder().forward(tape, y);
  const std::array<std::size_t, 6> widths{h, h, h, h, a, a};
  const auto parts = split(out, widths);
  const Var left_in = slice(y, 0, h);
  const Var right_in = slice(y, h, h);
  return DecoderOutput{gate(left_in, parts[0], parts[2]), gate(right_in, parts[1], parts[3]), parts[4], parts[5]};
}

Var border_cell_left(Tape& tape, const ModelParams& params, Var half) {
  const std::size_t h = params.config().half();
  require_width("border_cell_left", half, h);
  const auto parts = split(params.border_left().forward(tape, half), std::array<std::size_t, 2>{h, h});
  return gate(half, parts[0], parts[1]);
}

Var border_cell_right(Tape& tape, const ModelParams& params, Var half) {
  const std::size_t h = params.config().half();
  require_width("border_cell_right", half, h);
  const auto parts = split(params.border_right().forward(tape, half), std::array<std::size_t, 2>{h, h});
  return gate(half, parts[0], parts[1]);
}

VariationalSample variational_head(Tape& tape, const ModelParams& params, Var x, std::uint64_t seed) {
  if (!params.config().variational) throw ConfigError("variational_head: model was built without the VAE head");
  const std::size_t m = params.config().m;
  require_width("variational_head", x, m);
  const Var rho = params.variance().forward(tape, x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Real> noise(m);
  for (auto& v : noise) v = static_cast<Real>(normal(rng));
  const Var xi = tape.constant(Tensor({1, m}, std::move(noise)));
  const Var sample = add(x, mul(xi, exp(rho)));
  // 0.5 * (sum exp(2 rho) + |x|^2 - 2 sum rho - m)
  const Var inner = sub(add(sum(exp(scale(rho, Real(2)))), squared_norm(x)), scale(sum(rho), Real(2)));
  const Var kl = scale(sub(inner, tape.constant(Tensor::scalar(static_cast<Real>(m)))), Real(0.5));
  return VariationalSample{sample, rho, kl};
}

double gaussian_kl(std::span<const Real> mean, std::span<const Real> log_std) {
  double kl = 0.0;
  for (std::size_t k = 0; k < mean.size(); ++k) {
    const double r = log_std[k];
    const double x = mean[k];
    kl += std::exp(2.0 * r) + x * x - 1.0 - 2.0 * r;
  }
  return 0.5 * kl;
}

}  // namespace regae

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "regae/checkpoint.hpp"
#include "regae/tensor.hpp"

namespace regae {

struct CellConfig {
  std::size_t m = 32;  // embedding size, even
  std::size_t l = 1;   // patch side
  std::vector<std::size_t> encoder_hidden{64};
  std::vector<std::size_t> decoder_hidden{64};
  bool variational = false;
  /// Starting output bias of f^rho: the log standard deviation of the noise
  /// before training. Keeps early samples close to the embedding.
  double initial_log_std = -5.0;

  std::size_t half() const { return m / 2; }
  std::size_t patch_area() const { return l * l; }
  /// Hidden widths of the border networks: decoder widths halved.
  std::vector<std::size_t> border_hidden() const;

  /// Throws ConfigError.
  void validate() const;
};

/// Feed-forward network: ELU hidden layers, linear output layer.
/// Weights are Glorot-uniform, biases zero (f^rho's output bias excepted).
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& prefix, std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
      std::mt19937_64& rng);

  Var forward(Tape& tape, Var x) const;

  std::size_t input_size() const;
  std::size_t output_size() const;

  /// weight_0, bias_0, weight_1, bias_1, ...
  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }

 private:
  std::vector<Parameter> params_;
};

/// Every trainable weight of the autoencoder:
///   encoder      f^e : 2m + l^2 -> 3m
///   decoder      f^d : m -> 4(m/2) + 2 l^2
///   border_left  f^{d1} : m/2 -> 2(m/2)
///   border_right f^{d2} : m/2 -> 2(m/2)
///   variance     f^rho : m -> m   (variational mode only)
class ModelParams {
 public:
  ModelParams(const CellConfig& config, std::uint64_t seed);

  const CellConfig& config() const { return config_; }

  const Mlp& encoder() const { return encoder_; }
  const Mlp& decoder() const { return decoder_; }
  const Mlp& border_left() const { return border_left_; }
  const Mlp& border_right() const { return border_right_; }
  const Mlp& variance() const { return variance_; }
  Mlp& encoder() { return encoder_; }
  Mlp& decoder() { return decoder_; }
  Mlp& border_left() { return border_left_; }
  Mlp& border_right() { return border_right_; }
  Mlp& variance() { return variance_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t scalar_count() const;

  /// Copies values and optimizer state from a checkpoint. Names, count and
  /// shapes must match exactly (DataError otherwise).
  void load(const CheckpointData& data);

 private:
  CellConfig config_;
  Mlp encoder_;
  Mlp decoder_;
  Mlp border_left_;
  Mlp border_right_;
  Mlp variance_;
};

/// e(x0, x1, a) = (x0 o s(z0) + x1 o (1 - s(z0))) o s(z1) + elu(x^) o (1 - s(z1))
/// with <z0, z1, x^> = f^e(x0, x1, a). A missing input is the zero vector.
Var encoder_cell(Tape& tape, const ModelParams& params, std::optional<Var> x0, std::optional<Var> x1, Var patch);

struct DecoderOutput {
  Var left;      // left half of the embedding below
  Var right;     // right half of the embedding to the right
  Var b_logits;  // 1 x l^2, row-major
  Var c_logits;  // 1 x l^2, row-major
};

/// <z', z'', y^', y^'', b, c> = f^d(<y', y''>); each half is gated as
/// y o s(z) + elu(y^) o (1 - s(z)). b and c are returned as raw logits.
DecoderOutput decoder_cell(Tape& tape, const ModelParams& params, Var y);

/// d'(y') and d''(y''): the half-embedding gate driven by f^{d1} / f^{d2}.
Var border_cell_left(Tape& tape, const ModelParams& params, Var half);
Var border_cell_right(Tape& tape, const ModelParams& params, Var half);

struct VariationalSample {
  Var sample;  // x + xi o exp(rho)
  Var rho;     // log standard deviations
  Var kl;      // KL(N(x, diag exp(rho)^2) || N(0, I))
};

/// Requires a variational ModelParams. xi ~ N(0, I) is drawn from `seed`.
VariationalSample variational_head(Tape& tape, const ModelParams& params, Var x, std::uint64_t seed);

/// 0.5 * sum(exp(2 rho) + x^2 - 1 - 2 rho).
double gaussian_kl(std::span<const Real> mean, std::span<const Real> log_std);

}  // namespace regae

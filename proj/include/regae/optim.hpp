#pragma once

#include <span>

#include "regae/tensor.hpp"

namespace regae {

struct AdamConfig {
  Real lr = Real(3e-4);
  Real beta1 = Real(0.9);
  Real beta2 = Real(0.999);
  Real eps = Real(1e-8);
};

/// Global L2 norm over all parameter gradients (missing grads count as zero).
double global_grad_norm(std::span<Parameter* const> params);

/// Rescales all gradients by max_norm / g when the global norm g exceeds
/// max_norm. Returns the pre-clip norm.
double clip_global_norm(std::span<Parameter* const> params, Real max_norm);

/// Bias-corrected Adam update, then zeroes the gradients.
void adam_step(std::span<Parameter* const> params, const AdamConfig& config);

void zero_grad(std::span<Parameter* const> params);

}  // namespace regae

#include "regae/optim.hpp"

#include <cmath>

namespace regae {

double global_grad_norm(std::span<Parameter* const> params) {
  double total = 0.0;
  for (const Parameter* p : params) {
    for (Real g : p->tensor.grad) total += static_cast<double>(g) * static_cast<double>(g);
  }
  return std::sqrt(total);
}

double clip_global_norm(std::span<Parameter* const> params, Real max_norm) {
  const double norm = global_grad_norm(params);
  if (norm > static_cast<double>(max_norm)) {
    const auto factor = static_cast<Real>(static_cast<double>(max_norm) / norm);
    for (Parameter* p : params) {
      for (Real& g : p->tensor.grad) g *= factor;
    }
  }
  return norm;
}

void adam_step(std::span<Parameter* const> params, const AdamConfig& config) {
  for (Parameter* p : params) {
    auto& values = p->tensor.values;
    if (p->first_moment.size() != values.size()) p->first_moment.assign(values.size(), Real(0));
    if (p->second_moment.size() != values.size()) p->second_moment.assign(values.size(), Real(0));
    ++p->step;
    const auto t = static_cast<Real>(p->step);
    const Real correction1 = Real(1) - std::pow(config.beta1, t);
    const Real correction2 = Real(1) - std::pow(config.beta2, t);
    const bool has_grad = p->tensor.has_grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const Real g = has_grad ? p->tensor.grad[i] : Real(0);
      Real& m = p->first_moment[i];
      Real& v = p->second_moment[i];
      m = config.beta1 * m + (Real(1) - config.beta1) * g;
      v = config.beta2 * v + (Real(1) - config.beta2) * g * g;
      const Real m_hat = m / correction1;
      const Real v_hat = v / correction2;
      values[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
    }
    p->tensor.zero_grad();
  }
}

void zero_grad(std::span<Parameter* const> params) {
  for (Parameter* p : params) p->tensor.zero_grad();
}

}  // namespace regae

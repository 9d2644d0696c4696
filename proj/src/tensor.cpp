#include "regae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace regae {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? " x " : "") << shape[i];
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape s, std::vector<Real> v) : shape(std::move(s)), values(std::move(v)) {
  if (shape_size(shape) != values.size()) {
    throw ShapeError("tensor: shape " + shape_string(shape) + " holds " + std::to_string(shape_size(shape)) +
                     " values, got " + std::to_string(values.size()));
  }
}

Tensor Tensor::zeros(Shape s) {
  const std::size_t n = shape_size(s);
  return Tensor(std::move(s), std::vector<Real>(n, Real(0)));
}

Tensor Tensor::row(std::span<const Real> v) {
  return Tensor({1, v.size()}, std::vector<Real>(v.begin(), v.end()));
}

Tensor Tensor::scalar(Real value) { return Tensor({1}, {value}); }

std::vector<Real>& Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), Real(0));
  return grad;
}

Parameter::Parameter(std::string n, Tensor t)
    : name(std::move(n)),
      tensor(std::move(t)),
      first_moment(tensor.size(), Real(0)),
      second_moment(tensor.size(), Real(0)) {}

const Shape& Var::shape() const { return tape_->value(id_).shape; }
std::span<const Real> Var::values() const { return tape_->value(id_).values; }
std::size_t Var::size() const { return tape_->value(id_).size(); }

Real Var::item() const {
  const auto& t = tape_->value(id_);
  if (t.size() != 1) throw ShapeError("item: tensor of shape " + shape_string(t.shape) + " is not a scalar");
  return t.values[0];
}

void Tape::track(std::span<Parameter* const> params) {
  for (Parameter* p : params) tracked_[p] = p;
}

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant_row(std::span<const Real> values) { return constant(Tensor::row(values)); }

Var Tape::parameter(const Parameter& p) {
  if (auto it = parameter_nodes_.find(&p); it != parameter_nodes_.end()) return Var(this, it->second);
  Node node;
  node.external = &p.tensor;
  if (auto it = tracked_.find(&p); it != tracked_.end()) {
    node.sink = it->second;
    node.requires_grad = true;
  }
  nodes_.push_back(std::move(node));
  parameter_nodes_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                   [this](std::size_t p) { return nodes_[p].requires_grad; });
  if (node.requires_grad) {
    node.parents = std::move(parents);
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

std::vector<Real>& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  const std::size_t size = n.external ? n.external->size() : n.owned.size();
  if (n.owned.grad.size() != size) n.owned.grad.assign(size, Real(0));
  return n.owned.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape_ != this) throw std::invalid_argument("backward: variable belongs to another tape");
  if (value(loss.id()).size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got shape " + shape_string(value(loss.id()).shape));
  }
  for (auto& n : nodes_) n.owned.grad.clear();
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id())[0] = Real(1);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.owned.grad.empty()) continue;
    if (n.backward) n.backward(*this, id);
    if (n.sink) {
      auto& g = n.sink->tensor.ensure_grad();
      const auto& local = n.owned.grad;
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += local[i];
    }
  }
}

// ---------------------------------------------------------------------------

Real sigmoid_value(Real z) {
  if (z >= 0) return Real(1) / (Real(1) + std::exp(-z));
  const Real e = std::exp(z);
  return e / (Real(1) + e);
}

Real elu_value(Real z) { return z > 0 ? z : std::expm1(z); }

Real bce_with_logit_value(Real z, Real t) {
  return std::max(z, Real(0)) - z * t + std::log1p(std::exp(-std::abs(z)));
}

namespace {

std::size_t cols_of(const Shape& s) { return s.empty() ? 1 : s.back(); }

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " + shape_string(b));
}

void require_same_tape(const char* op, Var a, Var b) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

template <class Forward, class Derivative>
Var unary_elementwise(Var a, Forward f, Derivative df) {
  Tape& tape = a.tape();
  const Tensor& in = tape.value(a.id());
  Tensor out(in.shape, std::vector<Real>(in.size()));
  for (std::size_t i = 0; i < in.size(); ++i) out.values[i] = f(in.values[i]);
  const std::size_t ai = a.id();
  return tape.record(std::move(out), {ai}, [ai, df](Tape& t, std::size_t self) {
    const auto& x = t.value(ai).values;
    const auto& y = t.value(self).values;
    const auto& gy = t.grad(self);
    auto& gx = t.grad(ai);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape("matmul", a, b);
  Tape& tape = a.tape();
  const Tensor& ta = tape.value(a.id());
  const Tensor& tb = tape.value(b.id());
  const std::size_t k = cols_of(ta.shape);
  if (tb.shape.size() != 2 || tb.shape[0] != k) shape_fail("matmul", ta.shape, tb.shape);
  const std::size_t r = ta.size() / k;
  const std::size_t c = tb.shape[1];
  Shape out_shape = ta.shape;
  out_shape.back() = c;
  std::vector<Real> out(r * c, Real(0));
  for (std::size_t i = 0; i < r; ++i) {
    Real* yi = out.data() + i * c;
    for (std::size_t p = 0; p < k; ++p) {
      const Real x = ta.values[i * k + p];
      if (x == Real(0)) continue;
      const Real* wp = tb.values.data() + p * c;
      for (std::size_t j = 0; j < c; ++j) yi[j] += x * wp[j];
    }
  }
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return tape.record(Tensor(std::move(out_shape), std::move(out)), {ai, bi},
                     [ai, bi, r, k, c](Tape& t, std::size_t self) {
                       const auto& gy = t.grad(self);
                       if (t.requires_grad(ai)) {
                         const auto& w = t.value(bi).values;
                         auto& gx = t.grad(ai);
                         for (std::size_t i = 0; i < r; ++i) {
                           const Real* gyi = gy.data() + i * c;
                           for (std::size_t p = 0; p < k; ++p) {
                             const Real* wp = w.data() + p * c;
                             Real acc = 0;
                             for (std::size_t j = 0; j < c; ++j) acc += gyi[j] * wp[j];
                             gx[i * k + p] += acc;
                           }
                         }
                       }
                       if (t.requires_grad(bi)) {
                         const auto& x = t.value(ai).values;
                         auto& gw = t.grad(bi);
                         for (std::size_t i = 0; i < r; ++i) {
                           const Real* gyi = gy.data() + i * c;
                           for (std::size_t p = 0; p < k; ++p) {
                             const Real xv = x[i * k + p];
                             if (xv == Real(0)) continue;
                             Real* gwp = gw.data() + p * c;
                             for (std::size_t j = 0; j < c; ++j) gwp[j] += xv * gyi[j];
                           }
                         }
                       }
                     });
}

namespace {

enum class Binary { add, sub, mul };

Var binary(const char* name, Binary kind, Var a, Var b) {
  require_same_tape(name, a, b);
  Tape& tape = a.tape();
  const Tensor& ta = tape.value(a.id());
  const Tensor& tb = tape.value(b.id());
  bool broadcast = false;
  if (ta.shape != tb.shape) {
    // A single row broadcast across the rows of `a`.
    if (kind == Binary::mul || tb.size() != cols_of(ta.shape) || cols_of(tb.shape) != cols_of(ta.shape)) {
      shape_fail(name, ta.shape, tb.shape);
    }
    broadcast = true;
  }
  const std::size_t c = cols_of(ta.shape);
  std::vector<Real> out(ta.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Real y = tb.values[broadcast ? i % c : i];
    switch (kind) {
      case Binary::add: out[i] = ta.values[i] + y; break;
      case Binary::sub: out[i] = ta.values[i] - y; break;
      case Binary::mul: out[i] = ta.values[i] * y; break;
    }
  }
  const std::size_t ai = a.id();
  const std::size_t bi = b.id();
  return tape.record(Tensor(ta.shape, std::move(out)), {ai, bi},
                     [ai, bi, kind, broadcast, c](Tape& t, std::size_t self) {
                       const auto& gy = t.grad(self);
                       if (t.requires_grad(ai)) {
                         auto& ga = t.grad(ai);
                         if (kind == Binary::mul) {
                           const auto& yb = t.value(bi).values;
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * yb[i];
                         } else {
                           for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i];
                         }
                       }
                       if (t.requires_grad(bi)) {
                         auto& gb = t.grad(bi);
                         if (kind == Binary::mul) {
                           const auto& xa = t.value(ai).values;
                           for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * xa[i];
                         } else {
                           const Real sign = kind == Binary::sub ? Real(-1) : Real(1);
                           for (std::size_t i = 0; i < gy.size(); ++i) gb[broadcast ? i % c : i] += sign * gy[i];
                         }
                       }
                     });
}

}  // namespace

Var add(Var a, Var b) { return binary("add", Binary::add, a, b); }
Var sub(Var a, Var b) { return binary("sub", Binary::sub, a, b); }
Var mul(Var a, Var b) { return binary("mul", Binary::mul, a, b); }

Var scale(Var a, Real factor) {
  return unary_elementwise(
      a, [factor](Real x) { return x * factor; }, [factor](Real, Real) { return factor; });
}

Var sigmoid(Var a) {
  return unary_elementwise(a, sigmoid_value, [](Real, Real y) { return y * (Real(1) - y); });
}

Var elu(Var a) {
  return unary_elementwise(a, elu_value, [](Real x, Real y) { return x > 0 ? Real(1) : y + Real(1); });
}

Var exp(Var a) {
  return unary_elementwise(a, [](Real x) { return std::exp(x); }, [](Real, Real y) { return y; });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& tape = parts[0].tape();
  const Shape& first = tape.value(parts[0].id()).shape;
  const std::size_t rows = shape_size(first) / cols_of(first);
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (Var p : parts) {
    require_same_tape("concat", parts[0], p);
    const Shape& s = tape.value(p.id()).shape;
    if (shape_size(s) / cols_of(s) != rows || s.size() != first.size()) shape_fail("concat", first, s);
    widths.push_back(cols_of(s));
    ids.push_back(p.id());
    total += cols_of(s);
  }
  Shape out_shape = first;
  out_shape.back() = total;
  std::vector<Real> out(rows * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto& v = tape.value(ids[k]).values;
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(v.begin() + i * widths[k], widths[k], out.begin() + i * total + offset);
    }
    offset += widths[k];
  }
  return tape.record(Tensor(std::move(out_shape), std::move(out)), ids,
                     [ids, widths, rows, total](Tape& t, std::size_t self) {
                       const auto& gy = t.grad(self);
                       std::size_t off = 0;
                       for (std::size_t k = 0; k < ids.size(); ++k) {
                         if (t.requires_grad(ids[k])) {
                           auto& g = t.grad(ids[k]);
                           for (std::size_t i = 0; i < rows; ++i) {
                             for (std::size_t j = 0; j < widths[k]; ++j) {
                               g[i * widths[k] + j] += gy[i * total + off + j];
                             }
                           }
                         }
                         off += widths[k];
                       }
                     });
}

Var slice(Var a, std::size_t offset, std::size_t width) {
  Tape& tape = a.tape();
  const Tensor& in = tape.value(a.id());
  const std::size_t c = cols_of(in.shape);
  if (offset + width > c || width == 0) {
    throw ShapeError("slice: columns [" + std::to_string(offset) + ", " + std::to_string(offset + width) +
                     ") out of range for shape " + shape_string(in.shape));
  }
  const std::size_t rows = in.size() / c;
  Shape out_shape = in.shape;
  out_shape.back() = width;
  std::vector<Real> out(rows * width);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(in.values.begin() + i * c + offset, width, out.begin() + i * width);
  }
  const std::size_t ai = a.id();
  return tape.record(Tensor(std::move(out_shape), std::move(out)), {ai},
                     [ai, offset, width, rows, c](Tape& t, std::size_t self) {
                       const auto& gy = t.grad(self);
                       auto& g = t.grad(ai);
                       for (std::size_t i = 0; i < rows; ++i) {
                         for (std::size_t j = 0; j < width; ++j) g[i * c + offset + j] += gy[i * width + j];
                       }
                     });
}

std::vector<Var> split(Var a, std::span<const std::size_t> widths) {
  const std::size_t total = std::accumulate(widths.begin(), widths.end(), std::size_t{0});
  if (total != cols_of(a.shape())) {
    throw ShapeError("split: widths sum to " + std::to_string(total) + " but shape is " + shape_string(a.shape()));
  }
  std::vector<Var> out;
  std::size_t offset = 0;
  for (std::size_t w : widths) {
    out.push_back(slice(a, offset, w));
    offset += w;
  }
  return out;
}

Var sum(Var a) {
  Tape& tape = a.tape();
  const auto& v = tape.value(a.id()).values;
  Real s = 0;
  for (Real x : v) s += x;
  const std::size_t ai = a.id();
  return tape.record(Tensor::scalar(s), {ai}, [ai](Tape& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    for (Real& x : t.grad(ai)) x += g;
  });
}

Var mean(Var a) {
  const std::size_t n = a.size();
  if (n == 0) throw ShapeError("mean: empty tensor");
  return scale(sum(a), Real(1) / static_cast<Real>(n));
}

Var squared_norm(Var a) {
  Tape& tape = a.tape();
  const auto& v = tape.value(a.id()).values;
  Real s = 0;
  for (Real x : v) s += x * x;
  const std::size_t ai = a.id();
  return tape.record(Tensor::scalar(s), {ai}, [ai](Tape& t, std::size_t self) {
    const Real g = t.grad(self)[0];
    const auto& x = t.value(ai).values;
    auto& gx = t.grad(ai);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += Real(2) * x[i] * g;
  });
}

Var bce_with_logits(Var logits, std::span<const Real> targets) {
  Tape& tape = logits.tape();
  const Tensor& z = tape.value(logits.id());
  if (targets.size() != z.size()) {
    throw ShapeError("bce_with_logits: " + std::to_string(targets.size()) + " targets for logits of shape " +
                     shape_string(z.shape));
  }
  std::vector<Real> out(z.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bce_with_logit_value(z.values[i], targets[i]);
  const std::size_t zi = logits.id();
  std::vector<Real> tgt(targets.begin(), targets.end());
  return tape.record(Tensor(z.shape, std::move(out)), {zi}, [zi, tgt = std::move(tgt)](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    const auto& zv = t.value(zi).values;
    auto& gz = t.grad(zi);
    for (std::size_t i = 0; i < gz.size(); ++i) gz[i] += gy[i] * (sigmoid_value(zv[i]) - tgt[i]);
  });
}

Var select(Var a, std::span<const std::size_t> indices) {
  Tape& tape = a.tape();
  const auto& v = tape.value(a.id()).values;
  std::vector<Real> out(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= v.size()) {
      throw ShapeError("select: index " + std::to_string(indices[k]) + " out of range for shape " +
                       shape_string(a.shape()));
    }
    out[k] = v[indices[k]];
  }
  const std::size_t ai = a.id();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  Tensor value({idx.size()}, std::move(out));
  return tape.record(std::move(value), {ai}, [ai, idx = std::move(idx)](Tape& t, std::size_t self) {
    const auto& gy = t.grad(self);
    auto& g = t.grad(ai);
    for (std::size_t k = 0; k < idx.size(); ++k) g[idx[k]] += gy[k];
  });
}

Var linear(Var x, Var weight, Var bias) { return add(matmul(x, weight), bias); }

}  // namespace regae

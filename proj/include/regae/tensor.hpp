#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "regae/common.hpp"

namespace regae {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor with an optional same-shaped gradient buffer.
struct Tensor {
  Shape shape;
  std::vector<Real> values;
  std::vector<Real> grad;  // empty until a gradient is accumulated

  Tensor() = default;
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor zeros(Shape shape);
  /// A 1 x k row vector.
  static Tensor row(std::span<const Real> values);
  static Tensor scalar(Real value);

  std::size_t size() const { return values.size(); }
  bool has_grad() const { return !grad.empty(); }
  void zero_grad() { grad.clear(); }
  /// Gradient buffer, allocated (zero-filled) on first use.
  std::vector<Real>& ensure_grad();
};

/// A named trainable tensor plus its Adam state.
struct Parameter {
  std::string name;
  Tensor tensor;
  std::vector<Real> first_moment;
  std::vector<Real> second_moment;
  std::uint64_t step = 0;

  Parameter() = default;
  Parameter(std::string name, Tensor tensor);
};

class Tape;

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

  const Shape& shape() const;
  std::span<const Real> values() const;
  std::size_t size() const;
  /// The single value of a one-element tensor.
  Real item() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a computation for reverse-mode differentiation.
///
/// Nodes are appended in evaluation order, so reverse creation order is a valid
/// topological order for backward. Parameters enter through `parameter()`;
/// their values are referenced, not copied. Gradients only flow into
/// parameters registered with `track()` (a tape with nothing tracked is a pure
/// inference tape).
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Allow gradients to reach these parameters on backward().
  void track(std::span<Parameter* const> params);

  Var constant(Tensor value);
  Var constant_row(std::span<const Real> values);
  Var constant_row(std::initializer_list<Real> values) { return constant_row(std::span<const Real>(values)); }
  Var parameter(const Parameter& p);

  /// Accumulates d(loss)/d(parameter) into every tracked reachable parameter's
  /// grad. Throws ShapeError if `loss` is not a single value.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }

  // Primitive implementation interface.
  Var record(Tensor value, std::vector<std::size_t> parents, BackwardFn backward);
  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Node gradient, zero-filled on first access.
  std::vector<Real>& grad(std::size_t id);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Parameter* sink = nullptr;
    bool requires_grad = false;
    std::vector<std::size_t> parents;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter*, Parameter*> tracked_;
  std::unordered_map<const Parameter*, std::size_t> parameter_nodes_;
};

// ---- forward primitives -------------------------------------------------
// Shapes are interpreted as [leading..., cols]; "rows" is the product of the
// leading dimensions. Every primitive throws ShapeError naming itself and the
// offending shapes.

/// (r x k) * (k x c).
Var matmul(Var a, Var b);
/// Elementwise sum; `b` may also be a single row broadcast over the rows of `a`.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real factor);
Var sigmoid(Var a);
/// ELU with alpha = 1.
Var elu(Var a);
Var exp(Var a);
/// Concatenation along the last axis.
Var concat(std::span<const Var> parts);
/// Columns [offset, offset + width) of the last axis.
Var slice(Var a, std::size_t offset, std::size_t width);
std::vector<Var> split(Var a, std::span<const std::size_t> widths);
Var sum(Var a);
Var mean(Var a);
Var squared_norm(Var a);
/// Elementwise max(z, 0) - z t + log(1 + exp(-|z|)).
Var bce_with_logits(Var logits, std::span<const Real> targets);
/// Flat gather of the given element indices, result shape [indices.size()].
Var select(Var a, std::span<const std::size_t> indices);

/// x * W + b.
Var linear(Var x, Var weight, Var bias);

// Scalar helpers shared with tests.
Real sigmoid_value(Real z);
Real elu_value(Real z);
Real bce_with_logit_value(Real logit, Real target);

}  // namespace regae

#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "groupcdl/circatt/circsparse.hpp"

namespace gcdl::ad {

/// What a tape value holds. Complex tensors are stored interleaved (re, im),
/// so every buffer on the tape is plain doubles; gradients of complex values
/// use the convention g = dL/dRe + i dL/dIm.
struct Shape {
  int rows = 1;
  int cols = 1;
  int channels = 1;
  bool complex = false;
  /// Set for values living on a circulant-sparse pattern.
  std::shared_ptr<const BccbPattern> pattern;

  std::size_t elements() const {
    return pattern ? pattern->nnz() : static_cast<std::size_t>(rows) * cols * channels;
  }
  std::size_t reals() const { return complex ? 2 * elements() : elements(); }
  std::size_t plane_reals() const { return reals() / channels; }
  bool same_layout(const Shape& o) const {
    return rows == o.rows && cols == o.cols && channels == o.channels && complex == o.complex &&
           (pattern == o.pattern || (pattern && o.pattern && *pattern == *o.pattern));
  }

  static Shape planes(int r, int c, int ch, bool cplx = false) { return {r, c, ch, cplx, nullptr}; }
  static Shape vector(int n) { return {1, 1, n, false, nullptr}; }
  static Shape scalar() { return {1, 1, 1, false, nullptr}; }
  static Shape sparse(std::shared_ptr<const BccbPattern> p) {
    return {p->q1(), p->q2(), 1, false, std::move(p)};
  }
};

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape;
using BackwardFn = std::function<void(Tape&, int self)>;

/// Append-only record of a forward computation. backward() walks the nodes in
/// reverse and accumulates gradients into every node that needs one.
class Tape {
 public:
  Var leaf(std::vector<Real> value, Shape shape, bool requires_grad = true);
  Var constant(std::vector<Real> value, Shape shape) { return leaf(std::move(value), std::move(shape), false); }

  /// Record an op result. The backward closure is dropped when no input
  /// requires a gradient.
  Var push(std::vector<Real> value, Shape shape, std::initializer_list<Var> inputs, BackwardFn fn);

  const std::vector<Real>& value(Var v) const { return nodes_[v.id].value; }
  const Shape& shape(Var v) const { return nodes_[v.id].shape; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }

  /// Gradient of the last backward() target w.r.t. v; empty if none reached it.
  std::span<const Real> grad(Var v) const { return nodes_[v.id].grad; }
  /// Gradient buffer of v, allocated zero on first use. For backward closures.
  std::vector<Real>& grad_buffer(Var v);
  bool wants_grad(Var v) const { return v.valid() && nodes_[v.id].requires_grad; }

  /// Seed defaults to 1 for a scalar output.
  void backward(Var out, std::span<const Real> seed = {});
  void clear_grads();
  std::size_t size() const { return nodes_.size(); }
  Real scalar(Var v) const { return nodes_[v.id].value.at(0); }

 private:
  struct Node {
    std::vector<Real> value;
    std::vector<Real> grad;
    Shape shape;
    bool requires_grad = false;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace gcdl::ad

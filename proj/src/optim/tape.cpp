#include "groupcdl/optim/tape.hpp"

namespace gcdl::ad {

Var Tape::leaf(std::vector<Real> value, Shape shape, bool requires_grad) {
  require(value.size() == shape.reals(), "tape: leaf value size does not match its shape");
  nodes_.push_back(Node{std::move(value), {}, std::move(shape), requires_grad, {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(std::vector<Real> value, Shape shape, std::initializer_list<Var> inputs, BackwardFn fn) {
  require(value.size() == shape.reals(), "tape: op output size does not match its shape");
  bool needs = false;
  for (Var v : inputs) {
    require(v.valid() && v.id < static_cast<int>(nodes_.size()), "tape: op input is not on this tape");
    needs = needs || nodes_[v.id].requires_grad;
  }
  nodes_.push_back(Node{std::move(value), {}, std::move(shape), needs, needs ? std::move(fn) : BackwardFn{}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

std::vector<Real>& Tape::grad_buffer(Var v) {
  auto& n = nodes_[v.id];
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::clear_grads() {
  for (auto& n : nodes_) n.grad.clear();
}

void Tape::backward(Var out, std::span<const Real> seed) {
  require(out.valid() && out.id < static_cast<int>(nodes_.size()), "tape: backward target is not on this tape");
  clear_grads();
  auto& g = grad_buffer(out);
  if (seed.empty()) {
    require(g.size() == 1, "tape: a non-scalar output needs an explicit seed");
    g[0] = 1.0;
  } else {
    require(seed.size() == g.size(), "tape: seed size does not match the output");
    g.assign(seed.begin(), seed.end());
  }
  for (int id = out.id; id >= 0; --id) {
    auto& n = nodes_[id];
    if (n.backward && !n.grad.empty()) n.backward(*this, id);
  }
}

}  // namespace gcdl::ad

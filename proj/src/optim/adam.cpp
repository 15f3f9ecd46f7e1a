#include <algorithm>
#include <cmath>
#include <numbers>

#include "groupcdl/optim/optim.hpp"

namespace gcdl {

template <Scalar T>
AdamState adam_init(const GroupCdlParams<T>& params, Real lr) {
  require(lr > 0, "adam: learning rate must be positive");
  AdamState s;
  s.lr = lr;
  params.for_each_tensor([&](const TensorRef& r) {
    s.m.emplace_back(r.data.size(), 0.0);
    s.v.emplace_back(r.data.size(), 0.0);
  });
  return s;
}

template <Scalar T>
void adam_step(AdamState& s, const ParamGrads& grads, GroupCdlParams<T>& params) {
  require(grads.size() == s.m.size(), "adam: gradient list does not match the optimizer state");
  for (const auto& g : grads)
    for (Real v : g)
      if (!std::isfinite(v)) throw NumericError("adam: non-finite gradient");
  ++s.step;
  const Real c1 = 1 - std::pow(s.beta1, static_cast<Real>(s.step));
  const Real c2 = 1 - std::pow(s.beta2, static_cast<Real>(s.step));
  std::size_t k = 0;
  params.for_each_tensor([&](const TensorRef& r) {
    auto& m = s.m[k];
    auto& v = s.v[k];
    const auto& g = grads[k];
    require(g.size() == r.data.size(), "adam: gradient size mismatch for " + r.name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      m[i] = s.beta1 * m[i] + (1 - s.beta1) * g[i];
      v[i] = s.beta2 * v[i] + (1 - s.beta2) * g[i] * g[i];
      r.data[i] -= s.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + s.eps);
    }
    ++k;
  });
  project_params(params);
}

template <Scalar T>
void project_params(GroupCdlParams<T>& p) {
  p.d = project_unit_norm(p.d);
  for (auto& l : p.layers) {
    l.a = project_unit_norm(l.a);
    l.b = project_unit_norm(l.b);
    for (auto& v : l.thresholds.tau0) v = std::max(v, 0.0);
    for (auto& v : l.thresholds.tau1) v = std::max(v, 0.0);
    for (auto& v : l.rho) v = std::max(v, 1e-6);
  }
  p.transforms.gamma = std::clamp(p.transforms.gamma, 0.0, 1.0);
  for (auto& v : p.transforms.w_beta) v = std::max(v, 0.0);
}

Real cosine_lr(std::int64_t step, std::int64_t total, Real lr_max, Real lr_min) {
  if (total <= 1) return lr_max;
  const Real t = std::clamp(static_cast<Real>(step) / static_cast<Real>(total - 1), 0.0, 1.0);
  return lr_min + 0.5 * (lr_max - lr_min) * (1 + std::cos(std::numbers::pi * t));
}

#define GCDL_ADAM(T)                                                          \
  template AdamState adam_init(const GroupCdlParams<T>&, Real);               \
  template void adam_step(AdamState&, const ParamGrads&, GroupCdlParams<T>&); \
  template void project_params(GroupCdlParams<T>&);
GCDL_ADAM(Real)
GCDL_ADAM(Complex)
#undef GCDL_ADAM

}  // namespace gcdl

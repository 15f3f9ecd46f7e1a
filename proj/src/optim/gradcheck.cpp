#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>

#include "groupcdl/mri/mri.hpp"
#include "groupcdl/optim/ops.hpp"
#include "groupcdl/optim/optim.hpp"

namespace gcdl {

namespace {

using ad::Shape;
using ad::Tape;
using ad::Var;

// A registered check: input tensors (concatenated into one flat vector) and
// a builder that records the op on a tape from those tensors.
struct Case {
  std::vector<Shape> shapes;
  std::vector<Real> flat;
  std::function<Var(Tape&, const std::vector<Var>&)> build;
};

std::vector<Real> uniform(std::size_t n, std::mt19937_64& rng, Real lo = -1, Real hi = 1) {
  std::uniform_real_distribution<Real> u(lo, hi);
  std::vector<Real> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

void append(Case& c, Shape s, std::vector<Real> v) {
  c.shapes.push_back(std::move(s));
  c.flat.insert(c.flat.end(), v.begin(), v.end());
}

std::vector<Var> leaves(Tape& t, const Case& c, std::span<const Real> flat, bool grad) {
  std::vector<Var> out;
  std::size_t off = 0;
  for (const auto& s : c.shapes) {
    const auto n = s.reals();
    out.push_back(t.leaf(std::vector<Real>(flat.begin() + off, flat.begin() + off + n), s, grad));
    off += n;
  }
  return out;
}

// keep |z| at least `gap` away from every threshold kink at `tau`
void away_from(std::vector<Real>& z, Real tau, Real gap) {
  for (auto& v : z)
    if (std::abs(std::abs(v) - tau) < gap) v = v >= 0 ? tau + 2 * gap : -(tau + 2 * gap);
}

Case make_case(const std::string& id, std::mt19937_64& rng) {
  Case c;
  const int q1 = 4, q2 = 5, M = 2;
  if (id == "circ_dist_sim") {
    append(c, Shape::planes(q1, q2, M), uniform(q1 * q2 * M, rng));
    append(c, Shape::planes(q1, q2, M), uniform(q1 * q2 * M, rng));
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::dist_sim(t, v[0], v[1], 3); };
  } else if (id == "circ_dist_sim_complex") {
    append(c, Shape::planes(q1, q2, M, true), uniform(2 * q1 * q2 * M, rng));
    append(c, Shape::planes(q1, q2, M, true), uniform(2 * q1 * q2 * M, rng));
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::dist_sim(t, v[0], v[1], 3); };
  } else if (id == "circ_row_softmax") {
    auto p = std::make_shared<const BccbPattern>(q1, q2, 3);
    append(c, Shape::sparse(p), uniform(p->nnz(), rng, -2, 2));
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::row_softmax(t, v[0]); };
  } else if (id == "circ_att") {
    auto p = std::make_shared<const BccbPattern>(q1, q2, 3);
    append(c, Shape::sparse(p), uniform(p->nnz(), rng));
    append(c, Shape::planes(q1, q2, 3), uniform(q1 * q2 * 3, rng));
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::circ_att(t, v[0], v[1]); };
  } else if (id == "soft_threshold" || id == "soft_threshold_complex") {
    const bool cplx = id == "soft_threshold_complex";
    auto z = uniform((cplx ? 2 : 1) * q1 * q2 * M, rng);
    if (!cplx) away_from(z, 0.3, 0.05);
    append(c, Shape::planes(q1, q2, M, cplx), z);
    append(c, Shape::vector(M), {0.3, 0.3});
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::soft_threshold(t, v[0], v[1]); };
  } else if (id == "group_threshold") {
    auto p = std::make_shared<const BccbPattern>(q1, q2, 3);
    append(c, Shape::planes(q1, q2, M), uniform(q1 * q2 * M, rng));
    append(c, Shape::vector(M), {0.05, 0.08});
    append(c, Shape::sparse(p), uniform(p->nnz(), rng, 0.1, 1));
    c.build = [](Tape& t, const std::vector<Var>& v) {
      const Var xi = ad::sqrt(t, ad::circ_att(t, v[2], ad::abs2(t, v[0])));
      return ad::shrink(t, v[0], v[1], xi);
    };
  } else if (id == "learned_group_threshold") {
    const int Mh = 3;
    auto p = std::make_shared<const BccbPattern>(q1, q2, 3);
    append(c, Shape::planes(q1, q2, M), uniform(q1 * q2 * M, rng));
    append(c, Shape::vector(M), {0.05, 0.08});
    append(c, Shape::sparse(p), uniform(p->nnz(), rng, 0.1, 1));
    append(c, Shape::planes(Mh, M, 1), uniform(Mh * M, rng));
    append(c, Shape::planes(Mh, M, 1), uniform(Mh * M, rng, 0.2, 1));
    c.build = [](Tape& t, const std::vector<Var>& v) {
      const Var u = ad::pixelwise(t, v[3], v[0]);
      const Var xi = ad::sqrt(t, ad::circ_att(t, v[2], ad::abs2(t, u)));
      return ad::shrink(t, v[0], v[1], ad::pixelwise(t, v[4], xi, true));
    };
  } else if (id == "adjacency") {
    const int Mh = 3;
    append(c, Shape::planes(q1, q2, M), uniform(q1 * q2 * M, rng));
    append(c, Shape::planes(Mh, M, 1), uniform(Mh * M, rng));
    append(c, Shape::planes(Mh, M, 1), uniform(Mh * M, rng));
    append(c, Shape::vector(Mh), uniform(Mh, rng, 0.5, 1.5));
    c.build = [](Tape& t, const std::vector<Var>& v) {
      const Var k = ad::scale_channels_inv(t, ad::pixelwise(t, v[1], v[0]), v[3]);
      const Var q = ad::scale_channels_inv(t, ad::pixelwise(t, v[2], v[0]), v[3]);
      return ad::row_softmax(t, ad::dist_sim(t, k, q, 3));
    };
  } else if (id == "blend") {
    auto p = std::make_shared<const BccbPattern>(q1, q2, 3);
    append(c, Shape::sparse(p), uniform(p->nnz(), rng));
    append(c, Shape::sparse(p), uniform(p->nnz(), rng));
    append(c, Shape::scalar(), {0.7});
    c.build = [](Tape& t, const std::vector<Var>& v) { return ad::blend(t, v[0], v[1], v[2]); };
  } else if (id == "conv_analysis" || id == "conv_synthesis" || id == "conv_analysis_complex" ||
             id == "conv_synthesis_complex") {
    const bool cplx = id.ends_with("complex");
    const bool analysis = id.starts_with("conv_analysis");
    const int w = cplx ? 2 : 1, Mc = 3, C = 2, p = 3, s = 2, n = 6;
    append(c, Shape::planes(1, 1, Mc * C * p * p, cplx), uniform(w * Mc * C * p * p, rng));
    if (analysis) append(c, Shape::planes(n, n, C, cplx), uniform(w * n * n * C, rng));
    else append(c, Shape::planes(n / s, n / s, Mc, cplx), uniform(w * (n / s) * (n / s) * Mc, rng));
    c.build = [=](Tape& t, const std::vector<Var>& v) {
      return analysis ? ad::conv_analysis(t, v[1], v[0], Mc, p, s) : ad::conv_synthesis(t, v[1], v[0], C, p, s);
    };
  } else if (id == "mse") {
    append(c, Shape::planes(4, 4, 1), uniform(16, rng));
    auto target = uniform(16, rng);
    c.build = [=](Tape& t, const std::vector<Var>& v) { return ad::sum_squares(t, v[0], target); };
  } else if (id == "l1_ssim") {
    const int n = 12;
    RealImage target(n, n, 1, uniform(n * n, rng, 0, 1));
    auto x = target.vec();
    // offsets bounded away from zero keep |xhat - x| off its kink
    auto off = uniform(n * n, rng, 0.05, 0.2);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += coin(rng) ? off[i] : -off[i];
    append(c, Shape::planes(n, n, 1), x);
    c.build = [=](Tape& t, const std::vector<Var>& v) { return ad::l1_ssim(t, v[0], target, 0.5); };
  } else {
    throw ValidationError("grad_check: unknown op '" + id + "'");
  }
  return c;
}

Real check_case(const Case& c, std::uint64_t seed, Real eps) {
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  // random linear functional of the output
  Tape t0;
  const Var probe = c.build(t0, leaves(t0, c, c.flat, false));
  const auto weights = uniform(t0.value(probe).size(), rng);
  auto loss = [&](std::span<const Real> flat) {
    Tape t;
    const Var out = c.build(t, leaves(t, c, flat, false));
    const auto& y = t.value(out);
    Real s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += weights[i] * y[i];
    return s;
  };
  Tape t;
  const auto vars = leaves(t, c, c.flat, true);
  t.backward(c.build(t, vars), weights);
  std::vector<Real> g;
  for (const Var v : vars) {
    const auto gv = t.grad(v);
    if (gv.empty()) g.insert(g.end(), t.value(v).size(), 0.0);
    else g.insert(g.end(), gv.begin(), gv.end());
  }
  std::vector<std::size_t> coords(c.flat.size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (coords.size() > 200) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(200);
  }
  Real num = 0, den = 0;
  std::vector<Real> x = c.flat;
  for (auto i : coords) {
    const Real v = x[i];
    x[i] = v + eps;
    const Real fp = loss(x);
    x[i] = v - eps;
    const Real fm = loss(x);
    x[i] = v;
    const Real fd = (fp - fm) / (2 * eps);
    num = std::max(num, std::abs(fd - g[i]));
    den = std::max(den, std::abs(fd));
  }
  return num / std::max(den, 1e-12);
}

const std::vector<std::string>& registry() {
  static const std::vector<std::string> ids{
      "circ_dist_sim", "circ_dist_sim_complex", "circ_row_softmax", "circ_att",
      "soft_threshold", "soft_threshold_complex", "group_threshold", "learned_group_threshold",
      "adjacency", "blend", "conv_analysis", "conv_synthesis",
      "conv_analysis_complex", "conv_synthesis_complex", "mse", "l1_ssim", "network", "network_complex", "network_mri"};
  return ids;
}

// Toy K=2 network; with `mri` set the complex model runs on simulated
// 4x k-space with the Gram operator inserted.
template <Scalar T>
Real check_network(std::uint64_t seed, Real eps, bool mri) {
  NetHyper h;
  h.p = 3;
  h.K = 2;
  h.M = 4;
  h.Mh = 3;
  h.W = 3;
  h.dK = 1;
  h.stride = 2;
  auto params = init_ista(random_dictionary<T>(h, seed), h, {0.02, 1e-4, 0.6, 0.5, seed});
  std::mt19937_64 rng(seed + 1);
  std::uniform_real_distribution<Real> u(-0.05, 0.05);
  params.for_each_tensor([&](const TensorRef& r) {
    if (r.name != "gamma" && r.name.find("tau") == std::string::npos && r.name.find("rho") == std::string::npos)
      for (auto& v : r.data) v = r.name == "w_beta" ? std::abs(v + u(rng)) : v + u(rng);
  });
  const int n = 8;
  const bool cplx = is_complex_v<T>;
  const auto y_flat = uniform(cplx ? 2 * n * n : n * n, rng);
  const auto target = uniform(cplx ? 2 * n * n : n * n, rng);
  const auto yv = view_as<T>(std::span<const Real>(y_flat));
  const Image<T> y(n, n, 1, std::vector<T>(yv.begin(), yv.end()));
  const ForwardOptions fo{0.1, false, {}};
  MriSystem sys;
  Kspace ky;
  if constexpr (cplx) {
    if (mri) {
      sys = MriSystem::cartesian(gen_cartesian_mask(n, 4, 0.25, seed), n, gen_sens_maps(n, n, 2, seed));
      ky = forward_op(y, sys);
    }
  }

  Case c;
  {
    Tape probe;
    const auto pv = bind_params(probe, params, false);
    for (const Var v : pv.all) {
      c.shapes.push_back(probe.shape(v));
      c.flat.insert(c.flat.end(), probe.value(v).begin(), probe.value(v).end());
    }
  }
  c.build = [&](Tape& t, const std::vector<Var>& v) {
    // values for the forward pass come from the leaves themselves
    auto p = params;
    std::size_t k = 0;
    p.for_each_tensor([&](const TensorRef& r) {
      const auto& val = t.value(v[k++]);
      std::copy(val.begin(), val.end(), r.data.begin());
    });
    const auto vars = param_vars_from(v, h.K);
    Var out;
    if constexpr (cplx) {
      out = mri ? groupcdl_mri_forward(t, vars, p, ky, 0.1, sys) : groupcdl_forward(t, vars, p, y, fo);
    } else {
      out = groupcdl_forward(t, vars, p, y, fo);
    }
    return ad::sum_squares(t, out, target);
  };
  return check_case(c, seed, eps);
}

}  // namespace

std::vector<std::string> grad_check_ops() { return registry(); }

Real grad_check(const std::string& op_id, std::uint64_t seed, Real epsilon) {
  require(epsilon > 0, "grad_check: epsilon must be positive");
  if (op_id == "network") return check_network<Real>(seed, epsilon, false);
  if (op_id == "network_complex") return check_network<Complex>(seed, epsilon, false);
  if (op_id == "network_mri") return check_network<Complex>(seed, epsilon, true);
  std::mt19937_64 rng(seed);
  return check_case(make_case(op_id, rng), seed, epsilon);
}

}  // namespace gcdl

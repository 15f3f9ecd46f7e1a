#include "groupcdl/net/network.hpp"

#include <Eigen/Dense>
#include <random>

#include "groupcdl/optim/ops.hpp"

namespace gcdl {

void NetHyper::validate() const {
  require(p >= 1 && p % 2 == 1, "hyper: p must be odd");
  require(K >= 1, "hyper: K must be >= 1");
  require(M >= 1 && Mh >= 1, "hyper: M and M_h must be >= 1");
  require(W >= 1 && W % 2 == 1, "hyper: W must be odd");
  require(dK >= 1, "hyper: dK must be >= 1");
  require(stride >= 1, "hyper: s_c must be >= 1");
  require(channels >= 1, "hyper: channel count must be >= 1");
  require(sigma_scale >= 0, "hyper: sigma_scale must be nonnegative");
}

template <Scalar T>
void GroupCdlParams<T>::validate() const {
  hyper.validate();
  auto check_bank = [&](const ConvFilterBank<T>& b, ConvRole role, const std::string& what) {
    require(b.subbands == hyper.M && b.channels == hyper.channels && b.taps == hyper.p && b.stride == hyper.stride,
            "params: " + what + " does not match the hyperparameters");
    require(b.role == role, "params: " + what + " has the wrong role");
  };
  check_bank(d, ConvRole::synthesis, "d");
  require(static_cast<int>(layers.size()) == hyper.K, "params: layer count differs from K");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    const std::string pre = "layers." + std::to_string(k);
    check_bank(l.a, ConvRole::analysis, pre + ".a");
    check_bank(l.b, ConvRole::synthesis, pre + ".b");
    require(l.thresholds.tau0.size() == static_cast<std::size_t>(hyper.M) &&
                l.thresholds.tau1.size() == static_cast<std::size_t>(hyper.M),
            "params: " + pre + " thresholds must have M entries");
    require(l.rho.size() == static_cast<std::size_t>(hyper.Mh), "params: " + pre + ".rho must have M_h entries");
    for (Real r : l.rho) require(r > 0, "params: rho must be positive");
  }
  require(transforms.mh == hyper.Mh && transforms.m == hyper.M, "params: transform dims differ from M_h x M");
  transforms.validate();
}

template <Scalar T>
ConvFilterBank<T> random_dictionary(const NetHyper& h, std::uint64_t seed) {
  h.validate();
  ConvFilterBank<T> d(h.M, h.channels, h.p, h.stride, ConvRole::synthesis);
  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> nd;
  for (auto& w : d.weights) {
    if constexpr (is_complex_v<T>) w = T(nd(rng), nd(rng));
    else w = nd(rng);
  }
  for (int m = 0; m < d.subbands; ++m) {
    auto f = d.filter(m);
    const Real n = norm2<T>(f);
    for (auto& v : f) v /= n;
  }
  return spectral_normalize(d);
}

namespace {

std::vector<Real> unit_spectral_uniform(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Eigen::MatrixXd w(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) w(r, c) = u(rng);
  const Real s = Eigen::JacobiSVD<Eigen::MatrixXd>(w).singularValues()(0);
  std::vector<Real> out(static_cast<std::size_t>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(r) * cols + c] = w(r, c) / s;
  return out;
}

}  // namespace

template <Scalar T>
GroupCdlParams<T> init_ista(const ConvFilterBank<T>& d0, const NetHyper& h, const IstaInit& init) {
  h.validate();
  require(init.tau0 >= 0 && init.tau1 >= 0 && init.rho > 0 && init.gamma >= 0 && init.gamma <= 1,
          "init_ista: invalid initial values");
  GroupCdlParams<T> p;
  p.hyper = h;
  p.d = d0.with_role(ConvRole::synthesis);
  for (int k = 0; k < h.K; ++k) {
    LayerParams<T> l{d0.with_role(ConvRole::analysis), d0.with_role(ConvRole::synthesis),
                     ThresholdParams{std::vector<Real>(h.M, init.tau0), std::vector<Real>(h.M, init.tau1)},
                     std::vector<Real>(h.Mh, init.rho)};
    p.layers.push_back(std::move(l));
  }
  const auto w = unit_spectral_uniform(h.Mh, h.M, init.seed);
  p.transforms = NlssTransforms{h.Mh, h.M, w, w, w, w, init.gamma};
  p.validate();
  return p;
}

template <Scalar T>
ParamVars bind_params(ad::Tape& tape, const GroupCdlParams<T>& params, bool requires_grad) {
  using ad::Shape;
  ParamVars v;
  const bool cplx = is_complex_v<T>;
  params.for_each_tensor([&](const TensorRef& r) {
    Shape s;
    if (r.dims.size() == 4) s = Shape::planes(1, 1, static_cast<int>(r.data.size() / (cplx ? 2 : 1)), cplx);
    else if (r.dims.size() == 2) s = Shape::planes(static_cast<int>(r.dims[0]), static_cast<int>(r.dims[1]), 1);
    else s = Shape::vector(static_cast<int>(r.data.size()));
    v.all.push_back(tape.leaf(std::vector<Real>(r.data.begin(), r.data.end()), s, requires_grad));
  });
  return param_vars_from(std::move(v.all), params.hyper.K);
}

ParamVars param_vars_from(std::vector<ad::Var> all, int K) {
  require(all.size() == static_cast<std::size_t>(5 * K + 6), "param_vars_from: wrong tensor count");
  ParamVars v;
  v.all = std::move(all);
  std::size_t i = 0;
  v.d = v.all[i++];
  for (int k = 0; k < K; ++k) {
    v.a.push_back(v.all[i++]);
    v.b.push_back(v.all[i++]);
    v.tau0.push_back(v.all[i++]);
    v.tau1.push_back(v.all[i++]);
    v.rho.push_back(v.all[i++]);
  }
  v.w_theta = v.all[i++];
  v.w_phi = v.all[i++];
  v.w_alpha = v.all[i++];
  v.w_beta = v.all[i++];
  v.gamma = v.all[i++];
  return v;
}

template <Scalar T>
ParamGrads collect_grads(const ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<T>& params) {
  ParamGrads g;
  std::size_t i = 0;
  params.for_each_tensor([&](const TensorRef& r) {
    const auto gv = tape.grad(vars.all[i++]);
    if (gv.empty()) g.emplace_back(r.data.size(), 0.0);
    else g.emplace_back(gv.begin(), gv.end());
  });
  return g;
}

namespace {

template <Scalar T>
std::vector<Real> flatten(const Image<T>& x) {
  const auto r = [&] {
    if constexpr (is_complex_v<T>) return as_real(x.data());
    else return x.data();
  }();
  return std::vector<Real>(r.begin(), r.end());
}

}  // namespace

template <Scalar T>
ad::Var groupcdl_forward(ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<T>& params, const Image<T>& y,
                         const ForwardOptions& opt) {
  using namespace ad;
  const auto& h = params.hyper;
  require(y.channels() == h.channels, "groupcdl_forward: channel count differs from the model");
  require(opt.sigma >= 0, "groupcdl_forward: sigma must be nonnegative");
  const bool cplx = is_complex_v<T>;
  const int C = h.channels, p = h.p, s = h.stride;

  Image<T> yc = y;
  std::vector<T> mu(C);
  for (int c = 0; c < C; ++c) {
    T sum{};
    for (const T& v : y.plane(c)) sum += v;
    mu[c] = sum / static_cast<Real>(y.plane_size());
    for (T& v : yc.plane(c)) v -= mu[c];
  }
  const Image<T> yp = reflect_pad_to_multiple(yc, s);
  require(!opt.gram || (yp.rows() == y.rows() && yp.cols() == y.cols()),
          "groupcdl_forward: an inserted operator needs image dims divisible by the stride");
  const Var ytil = tape.constant(flatten(yp), Shape::planes(yp.rows(), yp.cols(), C, cplx));

  Var z, a_prev;
  for (int k = 0; k < h.K; ++k) {
    Var v;
    if (!z.valid()) {
      v = conv_analysis(tape, ytil, vars.a[k], h.M, p, s);
    } else {
      Var bz = conv_synthesis(tape, z, vars.b[k], C, p, s);
      if (opt.gram) bz = linear(tape, bz, tape.shape(bz), opt.gram, opt.gram);
      v = sub(tape, z, conv_analysis(tape, sub(tape, bz, ytil), vars.a[k], h.M, p, s));
    }
    const Var tau = opt.blind ? vars.tau0[k] : affine(tape, vars.tau0[k], vars.tau1[k], h.sigma_scale * opt.sigma);
    if (h.mode == ThresholdMode::elementwise) {
      z = soft_threshold(tape, v, tau);
      continue;
    }
    Var a = a_prev;
    if (refresh_schedule(k, h.dK)) {
      const Var kk = scale_channels_inv(tape, pixelwise(tape, vars.w_theta, v), vars.rho[k]);
      const Var qq = scale_channels_inv(tape, pixelwise(tape, vars.w_phi, v), vars.rho[k]);
      const Var fresh = row_softmax(tape, dist_sim(tape, kk, qq, h.W));
      a = k == 0 ? fresh : blend(tape, fresh, a_prev, vars.gamma);
    }
    const Var u = pixelwise(tape, vars.w_alpha, v);
    const Var xi = ad::sqrt(tape, circ_att(tape, a, abs2(tape, u)));
    const Var d = pixelwise(tape, vars.w_beta, xi, true);
    z = shrink(tape, v, tau, d);
    a_prev = a;
  }

  const Var xs = conv_synthesis(tape, z, vars.d, C, p, s);
  Image<T> mu_img(yp.rows(), yp.cols(), C);
  for (int c = 0; c < C; ++c)
    for (T& v : mu_img.plane(c)) v = mu[c];
  const Var x = add_const(tape, xs, flatten(mu_img));
  if (yp.rows() == y.rows() && yp.cols() == y.cols()) return x;
  return crop(tape, x, y.rows(), y.cols());
}

template <Scalar T>
Image<T> groupcdl_apply(const GroupCdlParams<T>& params, const Image<T>& y, const ForwardOptions& opt) {
  ad::Tape tape;
  const auto vars = bind_params(tape, params, false);
  const auto x = groupcdl_forward(tape, vars, params, y, opt);
  const auto& v = tape.value(x);
  Image<T> out(y.rows(), y.cols(), y.channels());
  const auto t = view_as<T>(std::span<const Real>(v));
  std::copy(t.begin(), t.end(), out.data().begin());
  return out;
}

#define GCDL_NET(T)                                                                                           \
  template struct GroupCdlParams<T>;                                                                         \
  template ConvFilterBank<T> random_dictionary<T>(const NetHyper&, std::uint64_t);                           \
  template GroupCdlParams<T> init_ista(const ConvFilterBank<T>&, const NetHyper&, const IstaInit&);          \
  template ParamVars bind_params(ad::Tape&, const GroupCdlParams<T>&, bool);                                 \
  template ParamGrads collect_grads(const ad::Tape&, const ParamVars&, const GroupCdlParams<T>&);            \
  template ad::Var groupcdl_forward(ad::Tape&, const ParamVars&, const GroupCdlParams<T>&, const Image<T>&, \
                                    const ForwardOptions&);                                                  \
  template Image<T> groupcdl_apply(const GroupCdlParams<T>&, const Image<T>&, const ForwardOptions&);
GCDL_NET(Real)
GCDL_NET(Complex)
#undef GCDL_NET

}  // namespace gcdl

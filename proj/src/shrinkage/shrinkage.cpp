#include "groupcdl/shrinkage/shrinkage.hpp"

#include <cmath>

namespace gcdl {

namespace {

void check_tau(const std::vector<Real>& tau, int channels, const char* op) {
  require(tau.size() == static_cast<std::size_t>(channels), std::string(op) + ": one threshold per subband");
  for (Real v : tau) require(v >= 0, std::string(op) + ": thresholds must be nonnegative");
}

// z o (1 - tau/d)_+, zero where d vanishes
template <Scalar T>
LatentCode<T> shrink_by(const LatentCode<T>& z, const std::vector<Real>& tau, const LatentCode<Real>& d) {
  LatentCode<T> out(z.rows(), z.cols(), z.channels());
  for (int m = 0; m < z.channels(); ++m) {
    const auto zm = z.plane(m);
    const auto dm = d.plane(m);
    auto om = out.plane(m);
    for (std::size_t i = 0; i < zm.size(); ++i)
      if (dm[i] > tau[m] && dm[i] > 0) om[i] = zm[i] * (1 - tau[m] / dm[i]);
  }
  return out;
}

template <Scalar T>
LatentCode<Real> squared(const LatentCode<T>& z) {
  LatentCode<Real> s(z.rows(), z.cols(), z.channels());
  auto sd = s.data();
  const auto zd = z.data();
  for (std::size_t i = 0; i < zd.size(); ++i) sd[i] = abs2(zd[i]);
  return s;
}

void sqrt_inplace(LatentCode<Real>& x) {
  for (auto& v : x.vec()) v = v > 0 ? std::sqrt(v) : 0.0;
}

}  // namespace

void NlssTransforms::validate() const {
  require(mh >= 1 && m >= 1, "NlssTransforms: dimensions must be positive");
  const auto n = static_cast<std::size_t>(mh) * m;
  require(w_theta.size() == n && w_phi.size() == n && w_alpha.size() == n && w_beta.size() == n,
          "NlssTransforms: each transform must be M_h x M");
  for (Real v : w_beta) require(v >= 0, "NlssTransforms: W_beta must be nonnegative");
  require(gamma >= 0 && gamma <= 1, "NlssTransforms: gamma must lie in [0, 1]");
}

template <Scalar T>
LatentCode<T> apply_pixelwise(const std::vector<Real>& w, int rows, int cols, const LatentCode<T>& z,
                              bool transposed) {
  require(w.size() == static_cast<std::size_t>(rows) * cols, "pixelwise: matrix size");
  const int in_ch = transposed ? rows : cols, out_ch = transposed ? cols : rows;
  require(z.channels() == in_ch, "pixelwise: channel mismatch");
  LatentCode<T> out(z.rows(), z.cols(), out_ch);
  for (int o = 0; o < out_ch; ++o) {
    auto dst = out.plane(o);
    for (int i = 0; i < in_ch; ++i) {
      const Real c = transposed ? w[i * cols + o] : w[o * cols + i];
      if (c == 0) continue;
      const auto src = z.plane(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += c * src[k];
    }
  }
  return out;
}

template <Scalar T>
LatentCode<T> soft_threshold(const LatentCode<T>& z, const std::vector<Real>& tau) {
  check_tau(tau, z.channels(), "soft_threshold");
  LatentCode<Real> mag(z.rows(), z.cols(), z.channels());
  const auto zd = z.data();
  auto md = mag.data();
  for (std::size_t i = 0; i < zd.size(); ++i) md[i] = std::abs(zd[i]);
  return shrink_by(z, tau, mag);
}

template <Scalar T>
LatentCode<T> group_threshold_classical(const LatentCode<T>& z, const std::vector<Real>& tau, const CircSparse& a) {
  check_tau(tau, z.channels(), "group_threshold_classical");
  auto xi = circ_att(a, squared(z));
  sqrt_inplace(xi);
  return shrink_by(z, tau, xi);
}

template <Scalar T>
CircSparse compute_adjacency(const LatentCode<T>& z, const NlssTransforms& t, const std::vector<Real>& rho,
                             int window) {
  require(z.channels() == t.m, "compute_adjacency: subband count does not match the transforms");
  require(rho.size() == static_cast<std::size_t>(t.mh), "compute_adjacency: rho must have M_h entries");
  for (Real r : rho) require(r > 0, "compute_adjacency: rho must be positive");
  auto k = apply_pixelwise(t.w_theta, t.mh, t.m, z);
  auto q = apply_pixelwise(t.w_phi, t.mh, t.m, z);
  for (int h = 0; h < t.mh; ++h) {
    for (auto& v : k.plane(h)) v /= rho[h];
    for (auto& v : q.plane(h)) v /= rho[h];
  }
  return circ_row_softmax(circ_dist_sim(k, q, window));
}

template <Scalar T>
LatentCode<T> learned_group_threshold(const LatentCode<T>& z, const std::vector<Real>& tau, const CircSparse& a,
                                      const NlssTransforms& t) {
  check_tau(tau, z.channels(), "learned_group_threshold");
  require(z.channels() == t.m, "learned_group_threshold: subband count does not match the transforms");
  const auto u = apply_pixelwise(t.w_alpha, t.mh, t.m, z);
  auto xi = circ_att(a, squared(u));
  sqrt_inplace(xi);
  const auto d = apply_pixelwise(t.w_beta, t.mh, t.m, xi, true);
  return shrink_by(z, tau, d);
}

CircSparse update_adjacency(const CircSparse& a_new, const CircSparse& a_old, Real gamma) {
  require(a_new.pattern == a_old.pattern, "update_adjacency: pattern mismatch");
  require(gamma >= 0 && gamma <= 1, "update_adjacency: gamma must lie in [0, 1]");
  CircSparse out(a_new.pattern);
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = gamma * a_new.values[i] + (1 - gamma) * a_old.values[i];
  return out;
}

std::vector<Real> adaptive_threshold(const ThresholdParams& p, Real sigma_hat, bool blind) {
  require(p.tau0.size() == p.tau1.size(), "adaptive_threshold: tau0 and tau1 lengths differ");
  require(sigma_hat >= 0, "adaptive_threshold: sigma_hat must be nonnegative");
  std::vector<Real> tau = p.tau0;
  if (!blind)
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] += sigma_hat * p.tau1[i];
  return tau;
}

#define GCDL_SHRINK(T)                                                                                         \
  template LatentCode<T> apply_pixelwise(const std::vector<Real>&, int, int, const LatentCode<T>&, bool);     \
  template LatentCode<T> soft_threshold(const LatentCode<T>&, const std::vector<Real>&);                      \
  template LatentCode<T> group_threshold_classical(const LatentCode<T>&, const std::vector<Real>&,            \
                                                   const CircSparse&);                                         \
  template CircSparse compute_adjacency(const LatentCode<T>&, const NlssTransforms&, const std::vector<Real>&, \
                                        int);                                                                  \
  template LatentCode<T> learned_group_threshold(const LatentCode<T>&, const std::vector<Real>&,              \
                                                 const CircSparse&, const NlssTransforms&);
GCDL_SHRINK(Real)
GCDL_SHRINK(Complex)
#undef GCDL_SHRINK

}  // namespace gcdl

#include "groupcdl/core/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace gcdl {

Real psnr(const RealImage& xhat, const RealImage& x, Real peak) {
  require(xhat.same_shape(x), "psnr: shape mismatch");
  require(peak > 0, "psnr: peak must be positive");
  Real se = 0;
  auto a = xhat.data();
  auto b = x.data();
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  if (se == 0) return kPsnrInfinite;
  const Real mse = se / static_cast<Real>(a.size());
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

std::vector<Real> gaussian_taps(int w, Real sigma) {
  std::vector<Real> g(w);
  const int h = w / 2;
  Real s = 0;
  for (int i = 0; i < w; ++i) {
    g[i] = std::exp(-0.5 * (i - h) * (i - h) / (sigma * sigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

// out[i,j] = sum_ab g[a] g[b] in[i+a, j+b] on the valid region
void filter_valid(const Real* in, int n1, int n2, const std::vector<Real>& g, Real* out) {
  const int w = static_cast<int>(g.size());
  const int o1 = n1 - w + 1, o2 = n2 - w + 1;
  std::vector<Real> tmp(static_cast<std::size_t>(n1) * o2, 0.0);
  for (int r = 0; r < n1; ++r)
    for (int j = 0; j < o2; ++j) {
      Real s = 0;
      for (int b = 0; b < w; ++b) s += g[b] * in[r * n2 + j + b];
      tmp[r * o2 + j] = s;
    }
  for (int i = 0; i < o1; ++i)
    for (int j = 0; j < o2; ++j) {
      Real s = 0;
      for (int a = 0; a < w; ++a) s += g[a] * tmp[(i + a) * o2 + j];
      out[i * o2 + j] = s;
    }
}

// adjoint of filter_valid, accumulated into out (n1 x n2)
void filter_valid_adjoint(const Real* in, int n1, int n2, const std::vector<Real>& g, Real* out) {
  const int w = static_cast<int>(g.size());
  const int o1 = n1 - w + 1, o2 = n2 - w + 1;
  std::vector<Real> tmp(static_cast<std::size_t>(n1) * o2, 0.0);
  for (int i = 0; i < o1; ++i)
    for (int j = 0; j < o2; ++j)
      for (int a = 0; a < w; ++a) tmp[(i + a) * o2 + j] += g[a] * in[i * o2 + j];
  for (int r = 0; r < n1; ++r)
    for (int j = 0; j < o2; ++j)
      for (int b = 0; b < w; ++b) out[r * n2 + j + b] += g[b] * tmp[r * o2 + j];
}

Real ssim_impl(const RealImage& xhat, const RealImage& x, Real peak, const SsimOptions& opt,
               std::vector<Real>* grad) {
  require(xhat.same_shape(x), "ssim: shape mismatch");
  require(peak > 0, "ssim: peak must be positive");
  const int n1 = x.rows(), n2 = x.cols();
  int w = std::min({opt.window, n1, n2});
  if (w % 2 == 0) --w;
  const auto g = gaussian_taps(w, opt.sigma);
  const int o1 = n1 - w + 1, o2 = n2 - w + 1;
  const std::size_t on = static_cast<std::size_t>(o1) * o2, n = x.plane_size();
  const Real c1 = (opt.k1 * peak) * (opt.k1 * peak), c2 = (opt.k2 * peak) * (opt.k2 * peak);
  if (grad) grad->assign(x.size(), 0.0);

  std::vector<Real> xx(n), yy(n), xy(n);
  std::vector<Real> mx(on), my(on), exx(on), eyy(on), exy(on);
  std::vector<Real> dmx(on), dexx(on), dexy(on);
  Real total = 0;
  for (int c = 0; c < x.channels(); ++c) {
    auto a = xhat.plane(c);
    auto b = x.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      xx[i] = a[i] * a[i];
      yy[i] = b[i] * b[i];
      xy[i] = a[i] * b[i];
    }
    filter_valid(a.data(), n1, n2, g, mx.data());
    filter_valid(b.data(), n1, n2, g, my.data());
    filter_valid(xx.data(), n1, n2, g, exx.data());
    filter_valid(yy.data(), n1, n2, g, eyy.data());
    filter_valid(xy.data(), n1, n2, g, exy.data());
    Real sum = 0;
    for (std::size_t i = 0; i < on; ++i) {
      const Real sxx = exx[i] - mx[i] * mx[i];
      const Real syy = eyy[i] - my[i] * my[i];
      const Real sxy = exy[i] - mx[i] * my[i];
      const Real a1 = 2 * mx[i] * my[i] + c1, a2 = 2 * sxy + c2;
      const Real b1 = mx[i] * mx[i] + my[i] * my[i] + c1, b2 = sxx + syy + c2;
      const Real s = (a1 * a2) / (b1 * b2);
      sum += s;
      if (grad) {
        dmx[i] = s * (2 * my[i] / a1 - 2 * my[i] / a2 - 2 * mx[i] / b1 + 2 * mx[i] / b2);
        dexx[i] = -s / b2;
        dexy[i] = 2 * s / a2;
      }
    }
    total += sum / static_cast<Real>(on);
    if (grad) {
      const Real scale = 1.0 / (static_cast<Real>(on) * x.channels());
      std::vector<Real> t1(n, 0.0), t2(n, 0.0), t3(n, 0.0);
      filter_valid_adjoint(dmx.data(), n1, n2, g, t1.data());
      filter_valid_adjoint(dexx.data(), n1, n2, g, t2.data());
      filter_valid_adjoint(dexy.data(), n1, n2, g, t3.data());
      Real* gp = grad->data() + c * n;
      for (std::size_t i = 0; i < n; ++i) gp[i] = scale * (t1[i] + 2 * a[i] * t2[i] + b[i] * t3[i]);
    }
  }
  return total / x.channels();
}

}  // namespace

Real ssim(const RealImage& xhat, const RealImage& x, Real peak, const SsimOptions& opt) {
  return ssim_impl(xhat, x, peak, opt, nullptr);
}

Real ssim_with_grad(const RealImage& xhat, const RealImage& x, std::vector<Real>& grad, Real peak,
                    const SsimOptions& opt) {
  return ssim_impl(xhat, x, peak, opt, &grad);
}

}  // namespace gcdl

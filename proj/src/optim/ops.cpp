#include "groupcdl/optim/ops.hpp"

#include <algorithm>
#include <cmath>

#include "groupcdl/core/conv.hpp"

namespace gcdl::ad {

namespace {

std::span<const Real> gout(Tape& t, int self) { return t.grad(Var{self}); }

void check_same(const Tape& t, Var a, Var b, const char* op) {
  require(t.shape(a).same_layout(t.shape(b)), std::string(op) + ": operand shapes differ");
}

// (re, im) interleaved planes <-> 2M real planes (re at 2m, im at 2m + 1)
std::vector<Real> deinterleave(std::span<const Real> v, int channels, std::size_t q) {
  std::vector<Real> out(v.size());
  for (int m = 0; m < channels; ++m)
    for (std::size_t i = 0; i < q; ++i) {
      out[(2 * m) * q + i] = v[(m * q + i) * 2];
      out[(2 * m + 1) * q + i] = v[(m * q + i) * 2 + 1];
    }
  return out;
}

void interleave_add(std::span<const Real> split, int channels, std::size_t q, std::span<Real> out) {
  for (int m = 0; m < channels; ++m)
    for (std::size_t i = 0; i < q; ++i) {
      out[(m * q + i) * 2] += split[(2 * m) * q + i];
      out[(m * q + i) * 2 + 1] += split[(2 * m + 1) * q + i];
    }
}

ConvGeometry geometry(int m, int c, int p, int s, int rows, int cols) {
  ConvGeometry g{m, c, p, s, rows, cols};
  g.validate();
  return g;
}

template <Scalar T>
void conv_fwd(bool analysis, const ConvGeometry& g, std::span<const Real> w, std::span<const Real> in,
              std::span<Real> out) {
  if (analysis) conv_analysis_raw<T>(g, view_as<T>(w), view_as<T>(in), view_as<T>(out));
  else conv_synthesis_raw<T>(g, view_as<T>(w), view_as<T>(in), view_as<T>(out));
}

template <Scalar T>
void conv_bwd(bool analysis, const ConvGeometry& g, std::span<const Real> w, std::span<const Real> in,
              std::span<const Real> gy, std::vector<Real>* gin, std::vector<Real>* gw) {
  if (gin) {
    std::vector<Real> tmp(gin->size());
    // the adjoint of analysis is synthesis with the same weights, and back
    if (analysis) conv_synthesis_raw<T>(g, view_as<T>(w), view_as<T>(gy), view_as<T>(std::span<Real>(tmp)));
    else conv_analysis_raw<T>(g, view_as<T>(w), view_as<T>(gy), view_as<T>(std::span<Real>(tmp)));
    for (std::size_t i = 0; i < tmp.size(); ++i) (*gin)[i] += tmp[i];
  }
  if (gw) {
    auto gws = view_as<T>(std::span<Real>(*gw));
    if (analysis) conv_analysis_weight_grad<T>(g, view_as<T>(in), view_as<T>(gy), gws);
    else conv_synthesis_weight_grad<T>(g, view_as<T>(in), view_as<T>(gy), gws);
  }
}

Var conv_op(Tape& t, bool analysis, Var in, Var w, int out_channels, int taps, int stride) {
  const Shape& si = t.shape(in);
  require(!si.pattern, "conv: input must be planes");
  const bool cplx = si.complex;
  require(t.shape(w).complex == cplx, "conv: weights and input must share a scalar kind");
  ConvGeometry g;
  Shape so;
  if (analysis) {
    g = geometry(out_channels, si.channels, taps, stride, si.rows, si.cols);
    so = Shape::planes(g.code_rows(), g.code_cols(), out_channels, cplx);
  } else {
    g = geometry(si.channels, out_channels, taps, stride, si.rows * stride, si.cols * stride);
    so = Shape::planes(g.rows, g.cols, out_channels, cplx);
  }
  require(t.shape(w).reals() == (cplx ? 2 : 1) * g.weight_count(), "conv: weight count mismatch");
  std::vector<Real> out(so.reals());
  if (cplx) conv_fwd<Complex>(analysis, g, t.value(w), t.value(in), out);
  else conv_fwd<Real>(analysis, g, t.value(w), t.value(in), out);
  return t.push(std::move(out), so, {in, w}, [=](Tape& tp, int self) {
    auto* gin = tp.wants_grad(in) ? &tp.grad_buffer(in) : nullptr;
    auto* gw = tp.wants_grad(w) ? &tp.grad_buffer(w) : nullptr;
    if (cplx) conv_bwd<Complex>(analysis, g, tp.value(w), tp.value(in), gout(tp, self), gin, gw);
    else conv_bwd<Real>(analysis, g, tp.value(w), tp.value(in), gout(tp, self), gin, gw);
  });
}

}  // namespace

Var add(Tape& t, Var a, Var b) {
  check_same(t, a, b, "add");
  std::vector<Real> out = t.value(a);
  const auto& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.push(std::move(out), t.shape(a), {a, b}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    for (Var v : {a, b})
      if (tp.wants_grad(v)) {
        auto& gv = tp.grad_buffer(v);
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
  });
}

Var sub(Tape& t, Var a, Var b) {
  check_same(t, a, b, "sub");
  std::vector<Real> out = t.value(a);
  const auto& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return t.push(std::move(out), t.shape(a), {a, b}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    if (tp.wants_grad(a)) {
      auto& ga = tp.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.wants_grad(b)) {
      auto& gb = tp.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var scale(Tape& t, Var a, Real c) {
  std::vector<Real> out = t.value(a);
  for (auto& v : out) v *= c;
  return t.push(std::move(out), t.shape(a), {a}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    auto& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var add_const(Tape& t, Var a, std::span<const Real> c) {
  require(c.size() == t.value(a).size(), "add_const: size mismatch");
  std::vector<Real> out = t.value(a);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[i];
  return t.push(std::move(out), t.shape(a), {a}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    auto& ga = tp.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var conv_analysis(Tape& t, Var x, Var w, int subbands, int taps, int stride) {
  return conv_op(t, true, x, w, subbands, taps, stride);
}

Var conv_synthesis(Tape& t, Var z, Var w, int channels, int taps, int stride) {
  return conv_op(t, false, z, w, channels, taps, stride);
}

Var pixelwise(Tape& t, Var w, Var z, bool transposed) {
  const Shape& sw = t.shape(w);
  const Shape& sz = t.shape(z);
  require(!sw.complex && !sw.pattern && sw.channels == 1, "pixelwise: transform must be a real matrix");
  const int rows = sw.rows, cols = sw.cols;
  const int in_ch = transposed ? rows : cols, out_ch = transposed ? cols : rows;
  require(sz.channels == in_ch && !sz.pattern, "pixelwise: channel count does not match the transform");
  const std::size_t q = sz.plane_reals();
  Shape so = sz;
  so.channels = out_ch;
  // coefficient linking input channel i to output channel o
  auto coef = [=](std::span<const Real> W, int o, int i) { return transposed ? W[i * cols + o] : W[o * cols + i]; };
  std::vector<Real> out(so.reals(), 0.0);
  const auto& W = t.value(w);
  const auto& zv = t.value(z);
  for (int o = 0; o < out_ch; ++o)
    for (int i = 0; i < in_ch; ++i) {
      const Real c = coef(W, o, i);
      if (c == 0) continue;
      for (std::size_t k = 0; k < q; ++k) out[o * q + k] += c * zv[i * q + k];
    }
  return t.push(std::move(out), so, {w, z}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& Wv = tp.value(w);
    const auto& zz = tp.value(z);
    if (tp.wants_grad(z)) {
      auto& gz = tp.grad_buffer(z);
      for (int o = 0; o < out_ch; ++o)
        for (int i = 0; i < in_ch; ++i) {
          const Real c = coef(Wv, o, i);
          for (std::size_t k = 0; k < q; ++k) gz[i * q + k] += c * g[o * q + k];
        }
    }
    if (tp.wants_grad(w)) {
      auto& gw = tp.grad_buffer(w);
      for (int o = 0; o < out_ch; ++o)
        for (int i = 0; i < in_ch; ++i) {
          Real s = 0;
          for (std::size_t k = 0; k < q; ++k) s += g[o * q + k] * zz[i * q + k];
          gw[transposed ? i * cols + o : o * cols + i] += s;
        }
    }
  });
}

Var scale_channels_inv(Tape& t, Var x, Var rho) {
  const Shape& sx = t.shape(x);
  require(t.value(rho).size() == static_cast<std::size_t>(sx.channels), "scale_channels_inv: rho length");
  const std::size_t q = sx.plane_reals();
  std::vector<Real> out = t.value(x);
  const auto& r = t.value(rho);
  for (int h = 0; h < sx.channels; ++h)
    for (std::size_t k = 0; k < q; ++k) out[h * q + k] /= r[h];
  return t.push(std::move(out), sx, {x, rho}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& rv = tp.value(rho);
    const auto& xv = tp.value(x);
    const int ch = static_cast<int>(rv.size());
    if (tp.wants_grad(x)) {
      auto& gx = tp.grad_buffer(x);
      for (int h = 0; h < ch; ++h)
        for (std::size_t k = 0; k < q; ++k) gx[h * q + k] += g[h * q + k] / rv[h];
    }
    if (tp.wants_grad(rho)) {
      auto& gr = tp.grad_buffer(rho);
      for (int h = 0; h < ch; ++h) {
        Real s = 0;
        for (std::size_t k = 0; k < q; ++k) s += g[h * q + k] * xv[h * q + k];
        gr[h] -= s / (rv[h] * rv[h]);
      }
    }
  });
}

Var dist_sim(Tape& t, Var k, Var q, int window) {
  check_same(t, k, q, "dist_sim");
  const Shape& sk = t.shape(k);
  require(!sk.pattern, "dist_sim: inputs must be planes");
  auto pat = std::make_shared<const BccbPattern>(sk.rows, sk.cols, window);
  const bool cplx = sk.complex;
  const int ch = cplx ? 2 * sk.channels : sk.channels;
  const std::size_t Q = pat->pixels();
  auto real_view = [=](const std::vector<Real>& v) {
    return cplx ? deinterleave(v, sk.channels, Q) : v;
  };
  std::vector<Real> s(pat->nnz());
  {
    const auto kv = real_view(t.value(k)), qv = real_view(t.value(q));
    circ_dist_sim_raw(*pat, ch, kv, qv, s);
  }
  return t.push(std::move(s), Shape::sparse(pat), {k, q}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const CircSparse ds(*pat, std::vector<Real>(g.begin(), g.end()));
    const auto kv = real_view(tp.value(k)), qv = real_view(tp.value(q));
    std::vector<Real> dk(kv.size(), 0.0), dq(kv.size(), 0.0);
    circ_dist_sim_bwd_raw(ds, ch, kv, qv, dk, dq);
    for (auto [v, d] : {std::pair{k, &dk}, std::pair{q, &dq}}) {
      if (!tp.wants_grad(v)) continue;
      auto& gv = tp.grad_buffer(v);
      if (cplx) {
        interleave_add(*d, sk.channels, Q, gv);
      } else {
        for (std::size_t i = 0; i < gv.size(); ++i) gv[i] += (*d)[i];
      }
    }
  });
}

Var row_softmax(Tape& t, Var s) {
  const Shape& ss = t.shape(s);
  require(ss.pattern != nullptr, "row_softmax: input must be circulant-sparse");
  CircSparse p(*ss.pattern, t.value(s));
  circ_row_softmax_inplace(p);
  return t.push(std::move(p.values), ss, {s}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& pat = *tp.shape(s).pattern;
    const CircSparse pv(pat, tp.value(Var{self}));
    CircSparse dp(pat, std::vector<Real>(g.begin(), g.end()));
    circ_row_softmax_bwd_inplace(pv, dp);
    auto& gs = tp.grad_buffer(s);
    for (std::size_t i = 0; i < gs.size(); ++i) gs[i] += dp.values[i];
  });
}

Var blend(Tape& t, Var a_new, Var a_old, Var gamma) {
  check_same(t, a_new, a_old, "blend");
  require(t.value(gamma).size() == 1, "blend: gamma must be a scalar");
  const Real gm = t.value(gamma)[0];
  const auto& an = t.value(a_new);
  const auto& ao = t.value(a_old);
  std::vector<Real> out(an.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = gm * an[i] + (1 - gm) * ao[i];
  return t.push(std::move(out), t.shape(a_new), {a_new, a_old, gamma}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const Real gv = tp.value(gamma)[0];
    if (tp.wants_grad(a_new)) {
      auto& ga = tp.grad_buffer(a_new);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += gv * g[i];
    }
    if (tp.wants_grad(a_old)) {
      auto& ga = tp.grad_buffer(a_old);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += (1 - gv) * g[i];
    }
    if (tp.wants_grad(gamma)) {
      const auto& n = tp.value(a_new);
      const auto& o = tp.value(a_old);
      Real s = 0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * (n[i] - o[i]);
      tp.grad_buffer(gamma)[0] += s;
    }
  });
}

Var abs2(Tape& t, Var u) {
  Shape so = t.shape(u);
  require(!so.pattern, "abs2: input must be planes");
  const bool cplx = so.complex;
  so.complex = false;
  const auto& uv = t.value(u);
  std::vector<Real> out(so.reals());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = cplx ? uv[2 * i] * uv[2 * i] + uv[2 * i + 1] * uv[2 * i + 1] : uv[i] * uv[i];
  return t.push(std::move(out), so, {u}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& v = tp.value(u);
    auto& gu = tp.grad_buffer(u);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (cplx) {
        gu[2 * i] += 2 * g[i] * v[2 * i];
        gu[2 * i + 1] += 2 * g[i] * v[2 * i + 1];
      } else {
        gu[i] += 2 * g[i] * v[i];
      }
    }
  });
}

Var circ_att(Tape& t, Var a, Var x) {
  const Shape& sa = t.shape(a);
  const Shape& sx = t.shape(x);
  require(sa.pattern != nullptr, "circ_att: adjacency must be circulant-sparse");
  require(!sx.complex && !sx.pattern, "circ_att: tape op expects real planes");
  require(sa.pattern->q1() == sx.rows && sa.pattern->q2() == sx.cols, "circ_att: grid mismatch");
  std::vector<Real> y(sx.reals());
  circ_att_raw(CircSparse(*sa.pattern, t.value(a)), sx.channels, t.value(x), y);
  return t.push(std::move(y), sx, {a, x}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& pat = *tp.shape(a).pattern;
    const int ch = tp.shape(x).channels;
    if (tp.wants_grad(a)) circ_att_grad_a_raw(pat, ch, tp.value(x), g, tp.grad_buffer(a));
    if (tp.wants_grad(x)) {
      const auto at = circ_transpose(CircSparse(pat, tp.value(a)));
      std::vector<Real> dx(g.size());
      circ_att_raw(at, ch, g, dx);
      auto& gx = tp.grad_buffer(x);
      for (std::size_t i = 0; i < dx.size(); ++i) gx[i] += dx[i];
    }
  });
}

Var sqrt(Tape& t, Var x) {
  require(!t.shape(x).complex, "sqrt: real input expected");
  std::vector<Real> out = t.value(x);
  for (auto& v : out) v = v > 0 ? std::sqrt(v) : 0.0;
  return t.push(std::move(out), t.shape(x), {x}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& y = tp.value(Var{self});
    auto& gx = tp.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (y[i] > 0) gx[i] += g[i] / (2 * y[i]);
  });
}

Var shrink(Tape& t, Var z, Var tau, Var d) {
  const Shape& sz = t.shape(z);
  const Shape& sd = t.shape(d);
  require(!sd.complex && sd.rows == sz.rows && sd.cols == sz.cols && sd.channels == sz.channels,
          "shrink: denominator must be real planes shaped like z");
  require(t.value(tau).size() == static_cast<std::size_t>(sz.channels), "shrink: one threshold per channel");
  const bool cplx = sz.complex;
  const int w = cplx ? 2 : 1;
  const std::size_t Q = static_cast<std::size_t>(sz.rows) * sz.cols;
  const auto& zv = t.value(z);
  const auto& tv = t.value(tau);
  const auto& dv = t.value(d);
  std::vector<Real> out(zv.size(), 0.0);
  for (int m = 0; m < sz.channels; ++m)
    for (std::size_t i = 0; i < Q; ++i) {
      const std::size_t e = m * Q + i;
      if (dv[e] > tv[m] && dv[e] > 0) {
        const Real s = 1 - tv[m] / dv[e];
        for (int c = 0; c < w; ++c) out[e * w + c] = s * zv[e * w + c];
      }
    }
  return t.push(std::move(out), sz, {z, tau, d}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& zz = tp.value(z);
    const auto& tt = tp.value(tau);
    const auto& dd = tp.value(d);
    auto* gz = tp.wants_grad(z) ? &tp.grad_buffer(z) : nullptr;
    auto* gt = tp.wants_grad(tau) ? &tp.grad_buffer(tau) : nullptr;
    auto* gd = tp.wants_grad(d) ? &tp.grad_buffer(d) : nullptr;
    for (int m = 0; m < static_cast<int>(tt.size()); ++m)
      for (std::size_t i = 0; i < Q; ++i) {
        const std::size_t e = m * Q + i;
        if (!(dd[e] > tt[m] && dd[e] > 0)) continue;
        const Real s = 1 - tt[m] / dd[e];
        Real gzr = 0;  // Re(conj(g) z)
        for (int c = 0; c < w; ++c) {
          gzr += g[e * w + c] * zz[e * w + c];
          if (gz) (*gz)[e * w + c] += s * g[e * w + c];
        }
        if (gt) (*gt)[m] -= gzr / dd[e];
        if (gd) (*gd)[e] += gzr * tt[m] / (dd[e] * dd[e]);
      }
  });
}

Var soft_threshold(Tape& t, Var z, Var tau) {
  const Shape& sz = t.shape(z);
  require(!sz.pattern, "soft_threshold: input must be planes");
  require(t.value(tau).size() == static_cast<std::size_t>(sz.channels), "soft_threshold: one threshold per channel");
  const bool cplx = sz.complex;
  const int w = cplx ? 2 : 1;
  const std::size_t Q = static_cast<std::size_t>(sz.rows) * sz.cols;
  auto modulus = [=](const std::vector<Real>& v, std::size_t e) {
    return cplx ? std::hypot(v[2 * e], v[2 * e + 1]) : std::abs(v[e]);
  };
  const auto& zv = t.value(z);
  const auto& tv = t.value(tau);
  std::vector<Real> out(zv.size(), 0.0);
  for (int m = 0; m < sz.channels; ++m)
    for (std::size_t i = 0; i < Q; ++i) {
      const std::size_t e = m * Q + i;
      const Real a = modulus(zv, e);
      if (a > tv[m]) {
        const Real s = 1 - tv[m] / a;
        for (int c = 0; c < w; ++c) out[e * w + c] = s * zv[e * w + c];
      }
    }
  return t.push(std::move(out), sz, {z, tau}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    const auto& zz = tp.value(z);
    const auto& tt = tp.value(tau);
    auto* gz = tp.wants_grad(z) ? &tp.grad_buffer(z) : nullptr;
    auto* gt = tp.wants_grad(tau) ? &tp.grad_buffer(tau) : nullptr;
    for (int m = 0; m < static_cast<int>(tt.size()); ++m)
      for (std::size_t i = 0; i < Q; ++i) {
        const std::size_t e = m * Q + i;
        const Real a = modulus(zz, e);
        if (!(a > tt[m])) continue;
        // u = z/|z|; out = z - tau u
        Real gu = 0;  // Re(conj(u) g)
        for (int c = 0; c < w; ++c) gu += zz[e * w + c] / a * g[e * w + c];
        if (gt) (*gt)[m] -= gu;
        if (gz) {
          const Real r = tt[m] / a;
          for (int c = 0; c < w; ++c) {
            const Real u = zz[e * w + c] / a;
            (*gz)[e * w + c] += g[e * w + c] - r * (g[e * w + c] - u * gu);
          }
        }
      }
  });
}

Var affine(Tape& t, Var tau0, Var tau1, Real s) {
  check_same(t, tau0, tau1, "affine");
  std::vector<Real> out = t.value(tau0);
  const auto& b = t.value(tau1);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b[i];
  return t.push(std::move(out), t.shape(tau0), {tau0, tau1}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    if (tp.wants_grad(tau0)) {
      auto& ga = tp.grad_buffer(tau0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (tp.wants_grad(tau1)) {
      auto& gb = tp.grad_buffer(tau1);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += s * g[i];
    }
  });
}

Var linear(Tape& t, Var x, Shape out, LinearMap forward, LinearMap adjoint) {
  std::vector<Real> y(out.reals());
  forward(t.value(x), y);
  return t.push(std::move(y), std::move(out), {x}, [=, adjoint = std::move(adjoint)](Tape& tp, int self) {
    auto& gx = tp.grad_buffer(x);
    std::vector<Real> tmp(gx.size());
    adjoint(gout(tp, self), tmp);
    for (std::size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
  });
}

Var crop(Tape& t, Var x, int rows, int cols) {
  const Shape& sx = t.shape(x);
  require(!sx.pattern && rows >= 1 && cols >= 1 && rows <= sx.rows && cols <= sx.cols, "crop: bad window");
  const int w = sx.complex ? 2 : 1;
  Shape so = sx;
  so.rows = rows;
  so.cols = cols;
  const int in_rows = sx.rows, in_cols = sx.cols, ch = sx.channels;
  auto index = [=](int c, int r, int col, bool in) {
    return in ? ((static_cast<std::size_t>(c) * in_rows + r) * in_cols + col) * w
              : ((static_cast<std::size_t>(c) * rows + r) * cols + col) * w;
  };
  const auto& xv = t.value(x);
  std::vector<Real> out(so.reals());
  for (int c = 0; c < ch; ++c)
    for (int r = 0; r < rows; ++r)
      for (int col = 0; col < cols; ++col)
        for (int k = 0; k < w; ++k) out[index(c, r, col, false) + k] = xv[index(c, r, col, true) + k];
  return t.push(std::move(out), so, {x}, [=](Tape& tp, int self) {
    const auto g = gout(tp, self);
    auto& gx = tp.grad_buffer(x);
    for (int c = 0; c < ch; ++c)
      for (int r = 0; r < rows; ++r)
        for (int col = 0; col < cols; ++col)
          for (int k = 0; k < w; ++k) gx[index(c, r, col, true) + k] += g[index(c, r, col, false) + k];
  });
}

Var sum_squares(Tape& t, Var xhat, std::span<const Real> target) {
  const auto& xv = t.value(xhat);
  require(target.size() == xv.size(), "sum_squares: shape mismatch");
  Real s = 0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += (xv[i] - target[i]) * (xv[i] - target[i]);
  std::vector<Real> tgt(target.begin(), target.end());
  return t.push({s}, Shape::scalar(), {xhat}, [=, tgt = std::move(tgt)](Tape& tp, int self) {
    const Real g = gout(tp, self)[0];
    const auto& x = tp.value(xhat);
    auto& gx = tp.grad_buffer(xhat);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += 2 * g * (x[i] - tgt[i]);
  });
}

Var l1_ssim(Tape& t, Var xhat, const RealImage& target, Real weight, Real peak) {
  const Shape& sx = t.shape(xhat);
  require(weight >= 0 && weight <= 1, "l1_ssim: weight must lie in [0, 1]");
  require(sx.rows == target.rows() && sx.cols == target.cols() && sx.channels == target.channels() && !sx.pattern,
          "l1_ssim: shape mismatch");
  const bool cplx = sx.complex;
  const auto& xv = t.value(xhat);
  RealImage mag(sx.rows, sx.cols, sx.channels);
  auto md = mag.data();
  for (std::size_t i = 0; i < md.size(); ++i) md[i] = cplx ? std::hypot(xv[2 * i], xv[2 * i + 1]) : xv[i];
  std::vector<Real> dssim;
  const Real s = ssim_with_grad(mag, target, dssim, peak);
  const auto td = target.data();
  const Real n = static_cast<Real>(md.size());
  Real l1 = 0;
  std::vector<Real> dm(md.size());
  for (std::size_t i = 0; i < md.size(); ++i) {
    const Real d = md[i] - td[i];
    l1 += std::abs(d);
    dm[i] = weight * (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) / n - (1 - weight) * dssim[i];
  }
  const Real value = weight * l1 / n + (1 - weight) * (1 - s);
  std::vector<Real> mags(md.begin(), md.end());
  return t.push({value}, Shape::scalar(), {xhat},
                [=, dm = std::move(dm), mags = std::move(mags)](Tape& tp, int self) {
                  const Real g = gout(tp, self)[0];
                  const auto& x = tp.value(xhat);
                  auto& gx = tp.grad_buffer(xhat);
                  for (std::size_t i = 0; i < dm.size(); ++i) {
                    if (!cplx) {
                      gx[i] += g * dm[i];
                    } else if (mags[i] > 0) {
                      gx[2 * i] += g * dm[i] * x[2 * i] / mags[i];
                      gx[2 * i + 1] += g * dm[i] * x[2 * i + 1] / mags[i];
                    }
                  }
                });
}

}  // namespace gcdl::ad

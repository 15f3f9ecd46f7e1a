#include "groupcdl/cli/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "groupcdl/circatt/circsparse.hpp"
#include "groupcdl/cli/corpus.hpp"
#include "groupcdl/kernels/kernels.hpp"

namespace gcdl {

Real burden_factor(int W, int s_w) {
  require(W >= 1 && s_w >= 1, "burden_factor: W and s_w must be positive");
  return static_cast<Real>(W) * W / (static_cast<Real>(s_w) * s_w);
}

RealImage cmd_pbda_reference(const RealImage& y, int W, int s_w, AttentionKind kind, PbdaStats* stats) {
  const int n1 = y.rows(), n2 = y.cols(), C = y.channels();
  require(W >= 1 && s_w >= 1 && s_w <= W, "pbda: need 1 <= s_w <= W");
  require(W <= n1 && W <= n2, "pbda: window larger than the image");
  const auto& kt = kernels::active();
  const int P = W * W;
  const int wr = (n1 + s_w - 1) / s_w, wc = (n2 + s_w - 1) / s_w;

  std::vector<Real> sum(y.size(), 0.0), sumsq(y.size(), 0.0), count(y.plane_size(), 0.0);
  std::vector<Real> x(static_cast<std::size_t>(P) * C), s(static_cast<std::size_t>(P) * P), out(x.size());
  std::vector<std::size_t> idx(P);

  for (int a = 0; a < wr; ++a)
    for (int b = 0; b < wc; ++b) {
      for (int i = 0; i < W; ++i)
        for (int j = 0; j < W; ++j) idx[i * W + j] = static_cast<std::size_t>((a * s_w + i) % n1) * n2 + (b * s_w + j) % n2;
      for (int c = 0; c < C; ++c) {
        const auto pl = y.plane(c);
        for (int p = 0; p < P; ++p) x[static_cast<std::size_t>(c) * P + p] = pl[idx[p]];
      }
      if (kind == AttentionKind::identity) {
        out = x;
      } else if (kind == AttentionKind::uniform) {
        for (int c = 0; c < C; ++c) {
          Real m = 0;
          for (int p = 0; p < P; ++p) m += x[static_cast<std::size_t>(c) * P + p];
          std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(c) * P, P, m / P);
        }
      } else {
        for (int i = 0; i < P; ++i) {
          Real* row = s.data() + static_cast<std::size_t>(i) * P;
          std::fill_n(row, P, 0.0);
          for (int c = 0; c < C; ++c) kt.sqdist(x[static_cast<std::size_t>(c) * P + i], x.data() + static_cast<std::size_t>(c) * P, row, P);
          const Real mx = *std::max_element(row, row + P);
          Real z = 0;
          for (int j = 0; j < P; ++j) z += (row[j] = std::exp(row[j] - mx));
          for (int j = 0; j < P; ++j) row[j] /= z;
          for (int c = 0; c < C; ++c) out[static_cast<std::size_t>(c) * P + i] = kt.dot(row, x.data() + static_cast<std::size_t>(c) * P, P);
        }
      }
      for (int c = 0; c < C; ++c)
        for (int p = 0; p < P; ++p) {
          // shifted by the input value to keep the variance free of cancellation
          const std::size_t at = static_cast<std::size_t>(c) * y.plane_size() + idx[p];
          const Real v = out[static_cast<std::size_t>(c) * P + p] - y.vec()[at];
          sum[at] += v;
          sumsq[at] += v * v;
        }
      for (int p = 0; p < P; ++p) count[idx[p]] += 1;
    }

  RealImage res(n1, n2, C);
  Real gap = 0;
  for (int c = 0; c < C; ++c)
    for (std::size_t i = 0; i < y.plane_size(); ++i) {
      const std::size_t at = static_cast<std::size_t>(c) * y.plane_size() + i;
      const Real m = sum[at] / count[i];
      res.vec()[at] = y.vec()[at] + m;
      gap += std::max(0.0, sumsq[at] / count[i] - m * m);
    }
  if (stats) {
    stats->windows = static_cast<std::int64_t>(wr) * wc;
    stats->pixels_processed = stats->windows * P;
    stats->consensus_gap = std::sqrt(gap / static_cast<Real>(y.size()));
  }
  return res;
}

RealImage circatt_reference(const RealImage& y, int W, AttentionKind kind) {
  const BccbPattern pat(y.rows(), y.cols(), W);
  if (kind == AttentionKind::identity) return circ_att(circ_identity(pat), y);
  if (kind == AttentionKind::uniform) return circ_att(circ_uniform(pat), y);
  CircSparse a = circ_dist_sim(y, y, W);
  circ_row_softmax_inplace(a);
  return circ_att(a, y);
}

RealImage bench_input(int n, int channels, std::uint64_t seed) {
  RealImage y(n, n, channels);
  for (int c = 0; c < channels; ++c) {
    const auto t = gen_texture(n, mix_seed(seed, 7, c));
    std::copy(t.vec().begin(), t.vec().end(), y.plane(c).begin());
  }
  // features on a scale where the softmax is neither flat nor one-hot
  for (auto& v : y.vec()) v *= 4;
  return y;
}

std::vector<BenchRow> run_bench(const BenchConfig& cfg, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  const auto y = bench_input(cfg.size, cfg.channels, seed);
  std::vector<BenchRow> rows;
  for (int W : cfg.windows) {
    BenchRow r;
    r.W = W;
    r.s_w = cfg.s_w;
    r.burden_analytic = burden_factor(W, cfg.s_w);
    RealImage yc, yp;
    PbdaStats st;
    Real tc = 1e300, tp = 1e300;
    for (int rep = 0; rep < cfg.reps; ++rep) {
      auto t0 = clock::now();
      yc = circatt_reference(y, W, AttentionKind::similarity);
      auto t1 = clock::now();
      yp = cmd_pbda_reference(y, W, cfg.s_w, AttentionKind::similarity, &st);
      auto t2 = clock::now();
      tc = std::min(tc, std::chrono::duration<Real>(t1 - t0).count());
      tp = std::min(tp, std::chrono::duration<Real>(t2 - t1).count());
    }
    r.seconds_circatt = tc;
    r.seconds_pbda = tp;
    r.ratio = tp / tc;
    // pixels processed per image pixel
    r.burden_counted = static_cast<Real>(st.pixels_processed) / (static_cast<Real>(cfg.size) * cfg.size);
    r.consensus_gap = st.consensus_gap;
    Real d = 0;
    for (std::size_t i = 0; i < yc.size(); ++i) d += (yc.vec()[i] - yp.vec()[i]) * (yc.vec()[i] - yp.vec()[i]);
    r.pbda_vs_circatt_rms = std::sqrt(d / static_cast<Real>(yc.size()));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace gcdl

#include <cmath>
#include <limits>

#include "doctest.h"
#include "groupcdl/circatt/circsparse.hpp"
#include "groupcdl/kernels/kernels.hpp"
#include "support/oracles.hpp"

using namespace gcdl;

namespace {

std::vector<Real> flat(const LatentCode<Real>& z) { return z.vec(); }

}  // namespace

TEST_CASE("neighbor index wraps circularly") {
  BccbPattern p(4, 4, 3);
  CHECK(p.neighbor(0, p.offset_of(-1, -1)) == 15);
  for (int i = 0; i < 16; ++i) CHECK(p.neighbor(i, p.offset_of(0, 0)) == i);
  for (int i = 0; i < 16; ++i) {
    std::vector<int> seen;
    for (int o = 0; o < p.offsets(); ++o) seen.push_back(p.neighbor(i, o));
    std::sort(seen.begin(), seen.end());
    CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  }
  CHECK_THROWS_AS(p.neighbor(0, 9), ValidationError);
  CHECK_THROWS_AS(BccbPattern(4, 4, 4), ValidationError);
}

TEST_CASE("window larger than the grid is clamped without duplicates") {
  for (int q : {2, 3, 4, 5}) {
    BccbPattern p(q, q + 1, 7);
    CHECK(p.offsets() == std::min(7, q) * std::min(7, q + 1));
    for (int i = 0; i < p.pixels(); ++i) {
      std::vector<int> seen;
      for (int o = 0; o < p.offsets(); ++o) seen.push_back(p.neighbor(i, o));
      std::sort(seen.begin(), seen.end());
      CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
      for (int o = 0; o < p.offsets(); ++o) CHECK(p.neighbor(p.neighbor(i, o), p.transpose_offset(o)) == i);
    }
  }
}

TEST_CASE("dense conversions") {
  BccbPattern p(4, 5, 3);
  const auto I = to_dense(circ_identity(p));
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) CHECK(I[i * 20 + j] == (i == j ? 1.0 : 0.0));
  CircSparse s(p, oracle::uniform(p.nnz(), 3));
  const auto d = to_dense(s, std::numeric_limits<Real>::quiet_NaN());
  CHECK(std::count_if(d.begin(), d.end(), [](Real v) { return !std::isnan(v); }) == 20 * 9);
  CHECK(from_dense(p, to_dense(s)) == s);
  CHECK_THROWS_AS(to_dense(CircSparse(BccbPattern(65, 65, 3))), ValidationError);
}

TEST_CASE("dist-sim matches the dense masked oracle") {
  for (int q1 : {3, 4, 6})
    for (int W : {3, 5})
      for (int M : {1, 3}) {
        const int q2 = q1 + 1;
        auto k = oracle::random_planes<Real>(q1, q2, M, 10 + q1);
        auto q = oracle::random_planes<Real>(q1, q2, M, 20 + q1);
        const auto s = circ_dist_sim(k, q, W);
        const auto ref = oracle::dist_sim(q1, q2, W, M, k.data(), q.data(), -INFINITY);
        CHECK(oracle::max_abs_diff(to_dense(s, -INFINITY), ref) <= 1e-12);
      }
  LatentCode<Real> c(5, 5, 2, std::vector<Real>(50, 0.7));
  const auto s0 = circ_dist_sim(c, c, 3);
  CHECK(std::all_of(s0.values.begin(), s0.values.end(), [](Real v) { return v == 0.0; }));
}

TEST_CASE("dist-sim on a 3x3 grid with one-hot codes, by hand") {
  // k[i] = e_i over 9 channels, q = 0: every stored entry is -1/2.
  LatentCode<Real> k(3, 3, 9), q(3, 3, 9);
  for (int i = 0; i < 9; ++i) k.at(i, i / 3, i % 3) = 1;
  const auto s = circ_dist_sim(k, q, 3);
  for (Real v : s.values) CHECK(v == -0.5);
  // k == q one-hot: diagonal 0, off-diagonal -1
  const auto s2 = circ_dist_sim(k, k, 3);
  for (int i = 0; i < 9; ++i)
    for (int o = 0; o < 9; ++o) CHECK(s2.at(i, o) == (s2.pattern.neighbor(i, o) == i ? 0.0 : -1.0));
}

TEST_CASE("complex dist-sim uses the squared modulus") {
  auto k = oracle::random_planes<Complex>(4, 4, 2, 1);
  auto q = oracle::random_planes<Complex>(4, 4, 2, 2);
  const auto s = circ_dist_sim(k, q, 3);
  for (int i = 0; i < 16; ++i)
    for (int o = 0; o < 9; ++o) {
      const int j = s.pattern.neighbor(i, o);
      Real d = 0;
      for (int m = 0; m < 2; ++m) d += std::norm(k.plane(m)[i] - q.plane(m)[j]);
      CHECK(std::abs(s.at(i, o) + 0.5 * d) <= 1e-14);
    }
}

TEST_CASE("row softmax") {
  BccbPattern p(4, 4, 3);
  const auto u = circ_row_softmax(CircSparse(p, 2.5));
  for (Real v : u.values) CHECK(std::abs(v - 1.0 / 9) <= 1e-15);
  CircSparse spike(p, 0.0);
  spike.at(5, 4) = 1000;
  const auto sp = circ_row_softmax(spike);
  CHECK(sp.at(5, 4) == doctest::Approx(1.0));
  CHECK(sp.at(5, 0) < 1e-300);

  for (int q1 : {4, 5, 8}) {
    auto k = oracle::random_planes<Real>(q1, q1, 2, q1);
    auto q = oracle::random_planes<Real>(q1, q1, 2, q1 + 100);
    const auto s = circ_dist_sim(k, q, 5);
    const auto P = circ_row_softmax(s);
    const auto ref = oracle::row_softmax(oracle::dist_sim(q1, q1, 5, 2, k.data(), q.data(), -INFINITY), q1 * q1);
    CHECK(oracle::max_abs_diff(to_dense(P), ref) <= 1e-12);
    for (int i = 0; i < P.pattern.pixels(); ++i) {
      Real sum = 0;
      for (Real v : P.row(i)) {
        CHECK(v >= 0);
        CHECK(v <= 1);
        sum += v;
      }
      CHECK(std::abs(sum - 1) <= 1e-12);
    }
  }
}

TEST_CASE("circ_att forward") {
  BccbPattern p(4, 4, 3);
  auto x = oracle::random_planes<Real>(4, 4, 3, 8);
  CHECK(circ_att(circ_identity(p), x) == x);
  LatentCode<Real> c(4, 4, 2, std::vector<Real>(32, 1.25));
  auto A = circ_row_softmax(CircSparse(p, oracle::uniform(p.nnz(), 4)));
  const auto yc1 = circ_att(A, c);
  for (Real v : yc1.vec()) CHECK(std::abs(v - 1.25) <= 1e-14);
  CircSparse R(p, oracle::uniform(p.nnz(), 5));
  CHECK(oracle::max_abs_diff(flat(circ_att(R, x)), oracle::matvec(to_dense(R), 16, 3, x.data())) <= 1e-12);

  auto xc = oracle::random_planes<Complex>(4, 4, 2, 9);
  const auto yc = circ_att(R, xc);
  const auto d = to_dense(R);
  for (int m = 0; m < 2; ++m)
    for (int i = 0; i < 16; ++i) {
      Complex s = 0;
      for (int j = 0; j < 16; ++j) s += d[i * 16 + j] * xc.plane(m)[j];
      CHECK(std::abs(s - yc.plane(m)[i]) <= 1e-14);
    }
}

TEST_CASE("transpose") {
  for (int q : {3, 4, 6}) {
    for (int W : {3, 5, 7}) {
      BccbPattern p(q, q + 2, W);
      CircSparse s(p, oracle::uniform(p.nnz(), q * W));
      const auto t = circ_transpose(s);
      CHECK(circ_transpose(t) == s);
      CHECK(oracle::max_abs_diff(to_dense(t), oracle::transpose(to_dense(s), p.pixels())) == 0.0);
    }
  }
  auto k = oracle::random_planes<Real>(5, 5, 2, 77);
  const auto sym = circ_dist_sim(k, k, 3);
  CHECK(circ_transpose(sym) == sym);
}

TEST_CASE("dist-sim backward: finite differences") {
  const int q1 = 4, q2 = 4, M = 2, W = 3;
  auto k = oracle::random_planes<Real>(q1, q2, M, 31);
  auto q = oracle::random_planes<Real>(q1, q2, M, 32);
  BccbPattern p(q1, q2, W);
  CircSparse ds(p, oracle::uniform(p.nnz(), 33));
  auto loss = [&](std::span<const Real> kv, std::span<const Real> qv) {
    std::vector<Real> s(p.nnz());
    circ_dist_sim_raw(p, M, kv, qv, s);
    Real l = 0;
    for (std::size_t t = 0; t < s.size(); ++t) l += ds.values[t] * s[t];
    return l;
  };
  const auto g = circ_dist_sim_bwd(ds, k, q);
  const auto fk = oracle::fd_gradient([&](std::span<const Real> v) { return loss(v, q.data()); }, k.data(), {});
  const auto fq = oracle::fd_gradient([&](std::span<const Real> v) { return loss(k.data(), v); }, q.data(), {});
  CHECK(oracle::rel_error(g.dk.data(), fk, {}) <= 1e-6);
  CHECK(oracle::rel_error(g.dq.data(), fq, {}) <= 1e-6);

  // shared input k == q
  const auto gs = circ_dist_sim_bwd(ds, k, k);
  std::vector<Real> tot(k.size());
  for (std::size_t t = 0; t < tot.size(); ++t) tot[t] = gs.dk.vec()[t] + gs.dq.vec()[t];
  const auto fs = oracle::fd_gradient([&](std::span<const Real> v) { return loss(v, v); }, k.data(), {});
  CHECK(oracle::rel_error(tot, fs, {}) <= 1e-6);

  const auto g0 = circ_dist_sim_bwd(CircSparse(p), k, q);
  for (Real v : g0.dk.vec()) CHECK(v == 0.0);
  for (Real v : g0.dq.vec()) CHECK(v == 0.0);
}

TEST_CASE("circ_att backward: finite differences") {
  const int q1 = 5, q2 = 4, M = 3;
  BccbPattern p(q1, q2, 3);
  CircSparse A(p, oracle::uniform(p.nnz(), 41));
  auto x = oracle::random_planes<Real>(q1, q2, M, 42);
  auto dy = oracle::random_planes<Real>(q1, q2, M, 43);
  auto loss = [&](const CircSparse& a, std::span<const Real> xv) {
    std::vector<Real> y(xv.size());
    circ_att_raw(a, M, xv, y);
    Real l = 0;
    for (std::size_t t = 0; t < y.size(); ++t) l += dy.vec()[t] * y[t];
    return l;
  };
  const auto g = circ_att_bwd(A, x, dy);
  CHECK(g.da.values.size() == p.nnz());
  const auto fa = oracle::fd_gradient(
      [&](std::span<const Real> v) { return loss(CircSparse(p, std::vector<Real>(v.begin(), v.end())), x.data()); },
      A.values, {});
  const auto fx = oracle::fd_gradient([&](std::span<const Real> v) { return loss(A, v); }, x.data(), {});
  CHECK(oracle::rel_error(g.da.values, fa, {}) <= 1e-6);
  CHECK(oracle::rel_error(g.dx.data(), fx, {}) <= 1e-6);

  const auto g0 = circ_att_bwd(A, x, LatentCode<Real>(q1, q2, M));
  for (Real v : g0.da.values) CHECK(v == 0.0);
  for (Real v : g0.dx.vec()) CHECK(v == 0.0);
}

TEST_CASE("softmax backward: finite differences") {
  BccbPattern p(4, 4, 3);
  CircSparse S(p, oracle::uniform(p.nnz(), 51, -3, 1));
  CircSparse G(p, oracle::uniform(p.nnz(), 52));
  auto loss = [&](std::span<const Real> v) {
    CircSparse s(p, std::vector<Real>(v.begin(), v.end()));
    circ_row_softmax_inplace(s);
    Real l = 0;
    for (std::size_t t = 0; t < s.values.size(); ++t) l += G.values[t] * s.values[t];
    return l;
  };
  const auto dS = circ_row_softmax_bwd(circ_row_softmax(S), G);
  CHECK(oracle::rel_error(dS.values, oracle::fd_gradient(loss, S.values, {}), {}) <= 1e-6);
}

TEST_CASE("scalar and avx2 circulant ops agree") {
  if (!kernels::cpu_supports(kernels::Isa::avx2) || !kernels::avx2_table()) return;
  const auto before = kernels::active().isa;
  auto k = oracle::random_planes<Real>(12, 10, 3, 61);
  auto q = oracle::random_planes<Real>(12, 10, 3, 62);
  auto run = [&] {
    auto A = circ_row_softmax(circ_dist_sim(k, q, 7));
    auto y = circ_att(A, k);
    auto g = circ_att_bwd(A, k, q);
    return std::make_tuple(A.values, y.vec(), g.da.values);
  };
  kernels::set_active(kernels::Isa::scalar);
  const auto [a0, y0, d0] = run();
  kernels::set_active(kernels::Isa::avx2);
  const auto [a1, y1, d1] = run();
  kernels::set_active(before);
  CHECK(oracle::max_abs_diff(a0, a1) <= 1e-14);
  CHECK(oracle::max_abs_diff(y0, y1) <= 1e-13);
  CHECK(oracle::max_abs_diff(d0, d1) <= 1e-13);
}

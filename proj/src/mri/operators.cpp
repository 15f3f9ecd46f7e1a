#include <Eigen/Dense>

#include <cmath>

#include "groupcdl/core/noise.hpp"
#include "groupcdl/mri/mri.hpp"

namespace gcdl {

void MriSystem::validate() const {
  require(n1 >= 1 && n2 >= 1, "MriSystem: dims must be positive");
  require(mask.size() == static_cast<std::size_t>(n1) * n2, "MriSystem: mask must have n1*n2 entries");
  for (auto m : mask) require(m <= 1, "MriSystem: mask entries must be 0 or 1");
  require(sens.rows() == n1 && sens.cols() == n2, "MriSystem: sensitivity maps do not match the image dims");
  require(noise_cov.empty() || noise_cov.size() == static_cast<std::size_t>(coils()) * coils(),
          "MriSystem: noise covariance must be C x C");
}

MriSystem MriSystem::identity(int n1, int n2) {
  MriSystem s;
  s.n1 = n1;
  s.n2 = n2;
  s.mask.assign(static_cast<std::size_t>(n1) * n2, 1);
  s.sens = ComplexImage(n1, n2, 1, std::vector<Complex>(static_cast<std::size_t>(n1) * n2, 1.0));
  return s;
}

MriSystem MriSystem::cartesian(const std::vector<std::uint8_t>& lines, int n1, ComplexImage sens) {
  const int n2 = static_cast<int>(lines.size());
  require(sens.rows() == n1 && sens.cols() == n2, "MriSystem::cartesian: sensitivity maps do not match the mask");
  MriSystem s;
  s.n1 = n1;
  s.n2 = n2;
  s.sens = std::move(sens);
  s.mask.assign(static_cast<std::size_t>(n1) * n2, 0);
  // centered index j sits at FFT index (j - n2/2) mod n2
  for (int j = 0; j < n2; ++j) {
    const int f = ((j - n2 / 2) % n2 + n2) % n2;
    for (int r = 0; r < n1; ++r) s.mask[static_cast<std::size_t>(r) * n2 + f] = lines[j];
  }
  s.validate();
  return s;
}

namespace {

void check_image(const ComplexImage& x, const MriSystem& sys, int channels, const char* what) {
  require(x.rows() == sys.n1 && x.cols() == sys.n2 && x.channels() == channels,
          std::string(what) + ": dimensions do not match the system");
}

void apply_mask(ComplexImage& k, const MriSystem& sys) {
  const auto n = k.plane_size();
  for (int c = 0; c < k.channels(); ++c) {
    auto p = k.plane(c);
    for (std::size_t i = 0; i < n; ++i)
      if (!sys.mask[i]) p[i] = 0;
  }
}

}  // namespace

ComplexImage sens_expand(const ComplexImage& x, const MriSystem& sys) {
  check_image(x, sys, 1, "sens_expand");
  const int C = sys.coils();
  ComplexImage out(sys.n1, sys.n2, C);
  const auto xp = x.plane(0);
  for (int c = 0; c < C; ++c) {
    auto o = out.plane(c);
    auto r = sys.sens.plane(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = r[i] * xp[i];
  }
  return out;
}

ComplexImage sens_reduce(const ComplexImage& u, const MriSystem& sys) {
  check_image(u, sys, sys.coils(), "sens_reduce");
  ComplexImage out(sys.n1, sys.n2, 1);
  auto o = out.plane(0);
  for (int c = 0; c < sys.coils(); ++c) {
    auto up = u.plane(c);
    auto r = sys.sens.plane(c);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += std::conj(r[i]) * up[i];
  }
  return out;
}

Kspace forward_op(const ComplexImage& x, const MriSystem& sys) {
  auto k = sens_expand(x, sys);
  fft2(k);
  apply_mask(k, sys);
  return k;
}

ComplexImage adjoint_op(const Kspace& y, const MriSystem& sys) {
  check_image(y, sys, sys.coils(), "adjoint_op");
  auto k = y;
  apply_mask(k, sys);
  fft2(k, true);
  return sens_reduce(k, sys);
}

ComplexImage gram_op(const ComplexImage& x, const MriSystem& sys) {
  auto k = sens_expand(x, sys);
  fft2(k);
  apply_mask(k, sys);  // M^H M == M
  fft2(k, true);
  return sens_reduce(k, sys);
}

ComplexImage zero_filled(const Kspace& y, const MriSystem& sys) { return adjoint_op(y, sys); }

std::vector<Complex> whitening_matrix(const std::vector<Complex>& cov, int coils) {
  require(coils >= 1 && cov.size() == static_cast<std::size_t>(coils) * coils,
          "whitening_matrix: covariance must be C x C");
  Eigen::MatrixXcd s(coils, coils);
  for (int i = 0; i < coils; ++i)
    for (int j = 0; j < coils; ++j) s(i, j) = cov[static_cast<std::size_t>(i) * coils + j];
  const Real scale = s.cwiseAbs().maxCoeff();
  require(scale > 0 && (s - s.adjoint()).cwiseAbs().maxCoeff() <= 1e-10 * scale,
          "whitening_matrix: covariance must be Hermitian and nonzero");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(s);
  const auto& ev = eig.eigenvalues();
  require(ev.minCoeff() > 1e-12 * ev.maxCoeff(), "whitening_matrix: covariance must be positive definite");
  const Eigen::MatrixXcd w =
      eig.eigenvectors() * ev.cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().adjoint();
  std::vector<Complex> out(cov.size());
  for (int i = 0; i < coils; ++i)
    for (int j = 0; j < coils; ++j) out[static_cast<std::size_t>(i) * coils + j] = w(i, j);
  return out;
}

Kspace coil_whiten(const Kspace& y, const std::vector<Complex>& cov) {
  const int C = y.channels();
  const auto w = whitening_matrix(cov, C);
  Kspace out(y.rows(), y.cols(), C);
  const auto n = y.plane_size();
  for (int i = 0; i < C; ++i) {
    auto o = out.plane(i);
    for (int j = 0; j < C; ++j) {
      const Complex wij = w[static_cast<std::size_t>(i) * C + j];
      auto yj = y.plane(j);
      for (std::size_t p = 0; p < n; ++p) o[p] += wij * yj[p];
    }
  }
  return out;
}

Kspace simulate_kspace(const ComplexImage& x, const MriSystem& sys, Real sigma, std::uint64_t seed) {
  auto k = forward_op(x, sys);
  if (sigma > 0) {
    k = awgn(k, sigma, seed);
    apply_mask(k, sys);
  }
  return k;
}

}  // namespace gcdl

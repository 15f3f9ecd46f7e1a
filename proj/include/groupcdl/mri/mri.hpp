#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "groupcdl/core/io.hpp"
#include "groupcdl/net/network.hpp"

namespace gcdl {

/// Multi-coil k-space: n1 x n2 x C, in FFT order (DC at index 0).
using Kspace = Planes<Complex>;

/// Observation model y = M F R x + noise.
struct MriSystem {
  int n1 = 1;
  int n2 = 1;
  /// Per-pixel sampling mask in FFT order, entries 0 or 1.
  std::vector<std::uint8_t> mask;
  /// Coil sensitivities, n1 x n2 x C, with sum_c |r_c|^2 == 1 where supported.
  ComplexImage sens;
  /// C x C row-major noise covariance; empty means already whitened.
  std::vector<Complex> noise_cov;

  int coils() const { return sens.channels(); }
  void validate() const;

  /// Unit single coil and a full mask.
  static MriSystem identity(int n1, int n2);
  /// Cartesian system from a centered line mask (length n2, readout along
  /// rows); the mask is ifftshifted into FFT order.
  static MriSystem cartesian(const std::vector<std::uint8_t>& centered_lines, int n1, ComplexImage sens);
};

/// Channel c of the result is r_c o x.
ComplexImage sens_expand(const ComplexImage& x, const MriSystem& sys);
/// sum_c conj(r_c) o u_c.
ComplexImage sens_reduce(const ComplexImage& u, const MriSystem& sys);

/// In-place unitary 2D DFT of every channel.
void fft2(ComplexImage& x, bool inverse = false);

Kspace forward_op(const ComplexImage& x, const MriSystem& sys);
ComplexImage adjoint_op(const Kspace& y, const MriSystem& sys);
/// H^H H x, applying the mask once.
ComplexImage gram_op(const ComplexImage& x, const MriSystem& sys);
/// H^H y.
ComplexImage zero_filled(const Kspace& y, const MriSystem& sys);

/// Sigma^{-1/2} for a Hermitian positive definite C x C covariance (row-major).
std::vector<Complex> whitening_matrix(const std::vector<Complex>& cov, int coils);
/// Applies Sigma^{-1/2} across coils at every k-space sample.
Kspace coil_whiten(const Kspace& y, const std::vector<Complex>& cov);

/// Centered line mask of length n2: round(center_frac * n2) central lines plus
/// uniformly drawn others up to round(n2 / accel) in total.
std::vector<std::uint8_t> gen_cartesian_mask(int n2, int accel, Real center_frac, std::uint64_t seed);
/// Column index of each set line.
std::vector<int> sampled_lines(const std::vector<std::uint8_t>& mask);

/// Ellipse phantom with randomized geometry, smooth texture and smooth phase;
/// max magnitude 1.
ComplexImage gen_phantom(int n, std::uint64_t seed);
/// Smooth complex Gaussian coil profiles normalized to sum_c |r_c|^2 == 1.
ComplexImage gen_sens_maps(int n1, int n2, int coils, std::uint64_t seed);

/// Simulates y = H x + noise with complex noise of total variance sigma^2
/// per sample; unsampled entries are zero.
Kspace simulate_kspace(const ComplexImage& x, const MriSystem& sys, Real sigma, std::uint64_t seed);

/// Records the Gram-inserted network applied to H^H y.
ad::Var groupcdl_mri_forward(ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<Complex>& params,
                             const Kspace& y, Real sigma_hat, const MriSystem& sys, bool blind = false);
ComplexImage groupcdl_mri_apply(const GroupCdlParams<Complex>& params, const Kspace& y, Real sigma_hat,
                                const MriSystem& sys, bool blind = false);

// "CKSP": u32 n1, n2, C, u32 scalar kind (complex), channel-major body,
// then an optional "MASK" chunk: u32 count, u8 entries.
struct KspaceFile {
  Kspace data;
  std::vector<std::uint8_t> mask;
};
void write_cksp(const std::filesystem::path& path, const Kspace& y, const std::vector<std::uint8_t>& mask = {},
                ScalarKind kind = ScalarKind::c128);
KspaceFile read_cksp(const std::filesystem::path& path);

}  // namespace gcdl

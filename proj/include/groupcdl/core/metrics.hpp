#pragma once

#include <limits>
#include <vector>

#include "groupcdl/core/planes.hpp"

namespace gcdl {

inline constexpr Real kPsnrInfinite = std::numeric_limits<Real>::infinity();

/// 10 log10(peak^2 / MSE); kPsnrInfinite when the images are identical.
Real psnr(const RealImage& xhat, const RealImage& x, Real peak = 1.0);

struct SsimOptions {
  int window = 11;
  Real sigma = 1.5;
  Real k1 = 0.01;
  Real k2 = 0.03;
};

/// Mean local SSIM (Gaussian window, valid region), averaged over channels.
/// Windows larger than the image shrink to the largest odd size that fits.
Real ssim(const RealImage& xhat, const RealImage& x, Real peak = 1.0, const SsimOptions& opt = {});

/// As ssim(), and writes d ssim / d xhat into grad (same layout as xhat).
Real ssim_with_grad(const RealImage& xhat, const RealImage& x, std::vector<Real>& grad, Real peak = 1.0,
                    const SsimOptions& opt = {});

}  // namespace gcdl

#pragma once

#include <vector>

#include "groupcdl/circatt/circsparse.hpp"

namespace gcdl {

/// Per-subband thresholds tau = tau0 + sigma * tau1.
struct ThresholdParams {
  std::vector<Real> tau0;
  std::vector<Real> tau1;

  bool operator==(const ThresholdParams&) const = default;
};

/// Pixel-wise transforms shared by all layers. Each matrix is M_h x M,
/// row-major: entry (h, m) at [h * M + m].
struct NlssTransforms {
  int mh = 1;
  int m = 1;
  std::vector<Real> w_theta, w_phi, w_alpha, w_beta;
  Real gamma = 0.8;

  void validate() const;
  bool operator==(const NlssTransforms&) const = default;
};

/// out[h] = sum_m W[h,m] z[m] (or the transpose), W real rows x cols.
template <Scalar T>
LatentCode<T> apply_pixelwise(const std::vector<Real>& w, int rows, int cols, const LatentCode<T>& z,
                              bool transposed = false);

template <Scalar T>
LatentCode<T> soft_threshold(const LatentCode<T>& z, const std::vector<Real>& tau);

/// z o (1 - tau / sqrt((I (x) A) |z|^2))_+
template <Scalar T>
LatentCode<T> group_threshold_classical(const LatentCode<T>& z, const std::vector<Real>& tau, const CircSparse& a);

/// Row softmax of -1/2 ||(W_theta z[i] - W_phi z[j]) / rho||^2 on the window.
template <Scalar T>
CircSparse compute_adjacency(const LatentCode<T>& z, const NlssTransforms& t, const std::vector<Real>& rho,
                             int window);

/// z o (1 - tau / W_beta^T sqrt(A (W_alpha z)^2))_+ ; zero where the
/// denominator vanishes.
template <Scalar T>
LatentCode<T> learned_group_threshold(const LatentCode<T>& z, const std::vector<Real>& tau, const CircSparse& a,
                                      const NlssTransforms& t);

CircSparse update_adjacency(const CircSparse& a_new, const CircSparse& a_old, Real gamma);

/// tau0 + sigma_hat * tau1, or tau0 alone in blind mode.
std::vector<Real> adaptive_threshold(const ThresholdParams& p, Real sigma_hat, bool blind = false);

}  // namespace gcdl

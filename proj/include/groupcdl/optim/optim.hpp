#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "groupcdl/net/network.hpp"

namespace gcdl {

/// ||xhat - x||^2; grad (optional) receives 2 (xhat - x) as interleaved reals.
template <Scalar T>
Real mse_loss(const Image<T>& xhat, const Image<T>& x, std::vector<Real>* grad = nullptr);

/// weight * mean|m - x| + (1 - weight) (1 - ssim(m, x)), m = |xhat|.
template <Scalar T>
Real l1_ssim_loss(const Image<T>& xhat, const RealImage& x, Real weight = 0.5, std::vector<Real>* grad = nullptr);

struct AdamState {
  Real lr = 5e-4;
  Real beta1 = 0.9;
  Real beta2 = 0.999;
  Real eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<Real>> m, v;

  bool operator==(const AdamState&) const = default;
};

template <Scalar T>
AdamState adam_init(const GroupCdlParams<T>& params, Real lr);

/// Bias-corrected Adam update followed by project_params. Throws
/// NumericError (and leaves state and params untouched) on a non-finite
/// gradient.
template <Scalar T>
void adam_step(AdamState& state, const ParamGrads& grads, GroupCdlParams<T>& params);

/// Unit-ball filters; tau >= 0; rho >= 1e-6; gamma in [0, 1]; W_beta >= 0.
template <Scalar T>
void project_params(GroupCdlParams<T>& params);

/// Cosine annealing from lr_max to lr_min over `total` steps.
Real cosine_lr(std::int64_t step, std::int64_t total, Real lr_max, Real lr_min);

// Classical solvers ---------------------------------------------------------

enum class PriorKind { l1, group };

struct PgmOptions {
  PriorKind prior = PriorKind::l1;
  Real lambda = 0.1;
  Real eta = 1.0;
  int iters = 100;
  /// Fixed adjacency for the group prior (grid of the code).
  const CircSparse* adjacency = nullptr;
  /// Warm start; zero when empty.
  const LatentCode<Real>* init = nullptr;
};

struct PgmResult {
  LatentCode<Real> z;
  std::vector<Real> objective;  // entry k is the objective of iterate k (k = 0 is the start)
};

/// 1/2 ||D z - y||^2 + lambda * psi(z), psi = ||z||_1 or sum sqrt(A |z|^2).
Real bpdn_objective(const Image<Real>& y, const ConvFilterBank<Real>& d, const LatentCode<Real>& z,
                    const PgmOptions& opt);

/// z <- prox(z - eta D^T (D z - y)); throws NumericError when the objective
/// exceeds 10x its initial value.
PgmResult pgm_solve(const Image<Real>& y, const ConvFilterBank<Real>& d, const PgmOptions& opt);

struct DictLearnOptions {
  int subbands = 8;
  int taps = 5;
  int stride = 1;
  Real lambda = 0.05;
  int epochs = 20;
  int pgm_iters = 30;
  int dict_steps = 5;
  std::uint64_t seed = 0;
};

struct DictLearnResult {
  ConvFilterBank<Real> d;
  std::vector<Real> objective;  // after each epoch (sum over the dataset)
};

/// Alternates sparse coding (warm-started PGM) with projected gradient steps
/// on the dictionary.
DictLearnResult dict_learn(const std::vector<RealImage>& dataset, const DictLearnOptions& opt,
                           const ConvFilterBank<Real>* init = nullptr);

// Gradient checks -------------------------------------------------------------

std::vector<std::string> grad_check_ops();
/// Central differences against the tape gradient for a registered op on a
/// random instance; returns ||g - fd||_inf / ||fd||_inf over sampled coords.
Real grad_check(const std::string& op_id, std::uint64_t seed = 0, Real epsilon = 1e-5);

}  // namespace gcdl

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "groupcdl/core/conv.hpp"
#include "groupcdl/optim/tape.hpp"
#include "groupcdl/shrinkage/shrinkage.hpp"

namespace gcdl {

enum class ThresholdMode { group, elementwise };

/// Architecture hyperparameters (p, K, M, M_h, W, dK, s_c) plus the image
/// channel count and how sigma enters the thresholds.
struct NetHyper {
  int p = 3;
  int K = 4;
  int M = 16;
  int Mh = 8;
  int W = 7;
  int dK = 2;
  int stride = 2;
  int channels = 1;
  ThresholdMode mode = ThresholdMode::group;
  /// tau = tau0 + sigma_scale * sigma * tau1 with sigma in [0, 1] units.
  Real sigma_scale = 255.0;

  void validate() const;
  bool operator==(const NetHyper&) const = default;
};

template <Scalar T>
struct LayerParams {
  ConvFilterBank<T> a;  // analysis
  ConvFilterBank<T> b;  // synthesis
  ThresholdParams thresholds;
  std::vector<Real> rho;

  bool operator==(const LayerParams&) const = default;
};

template <Scalar T>
struct GroupCdlParams {
  NetHyper hyper;
  ConvFilterBank<T> d;
  std::vector<LayerParams<T>> layers;
  NlssTransforms transforms;

  void validate() const;
  bool operator==(const GroupCdlParams&) const = default;

  /// Visits every trainable tensor as interleaved reals with its canonical
  /// name and logical dims (complex tensors count one element per value).
  template <class F>
  void for_each_tensor(F&& f);
  template <class F>
  void for_each_tensor(F&& f) const;
};

/// Data fields of one visited tensor.
struct TensorRef {
  std::string name;
  std::span<Real> data;
  std::vector<std::uint32_t> dims;
  bool complex = false;
};

struct IstaInit {
  Real tau0 = 1e-3;
  Real tau1 = 0.0;
  Real gamma = 0.8;
  Real rho = 1.0;
  std::uint64_t seed = 0;
};

/// Random dictionary (standard normal taps, unit filters) for a fresh model.
template <Scalar T>
ConvFilterBank<T> random_dictionary(const NetHyper& h, std::uint64_t seed);

/// A = B = D = D0 in every layer; one uniform draw shared by the four
/// pixel-wise transforms, scaled to unit spectral norm.
template <Scalar T>
GroupCdlParams<T> init_ista(const ConvFilterBank<T>& d0, const NetHyper& h, const IstaInit& init = {});

inline bool refresh_schedule(int k, int delta_k) {
  require(k >= 0 && delta_k >= 1, "refresh_schedule: k >= 0 and delta_k >= 1 required");
  return k % delta_k == 0;
}

/// Tape handles of every parameter tensor.
struct ParamVars {
  ad::Var d;
  std::vector<ad::Var> a, b, tau0, tau1, rho;
  ad::Var w_theta, w_phi, w_alpha, w_beta, gamma;
  std::vector<ad::Var> all;  // for_each_tensor order
};

template <Scalar T>
ParamVars bind_params(ad::Tape& tape, const GroupCdlParams<T>& params, bool requires_grad);
/// Names the handles of a for_each_tensor-ordered list for a K-layer model.
ParamVars param_vars_from(std::vector<ad::Var> all, int K);

/// Gradient of a loss with respect to every tensor, in for_each_tensor order.
using ParamGrads = std::vector<std::vector<Real>>;
template <Scalar T>
ParamGrads collect_grads(const ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<T>& params);

/// Image-domain operator inserted after each synthesis (the CS-MRI Gram).
using ImageOperator = std::function<void(std::span<const Real>, std::span<Real>)>;

struct ForwardOptions {
  Real sigma = 0;     // noise level in [0, 1] units
  bool blind = false;
  /// Self-adjoint operator G; layers use z - A^H (G B z - y~).
  ImageOperator gram;
};

/// Records the unrolled network on `tape` and returns x^ (same dims as y).
/// y is treated as a constant; dimensions not divisible by the stride are
/// reflect-padded and the output cropped back.
template <Scalar T>
ad::Var groupcdl_forward(ad::Tape& tape, const ParamVars& vars, const GroupCdlParams<T>& params, const Image<T>& y,
                         const ForwardOptions& opt);

/// Inference convenience wrapper.
template <Scalar T>
Image<T> groupcdl_apply(const GroupCdlParams<T>& params, const Image<T>& y, const ForwardOptions& opt);

/// Extra named records stored alongside the parameters (optimizer state).
using ExtraTensors = std::vector<std::pair<std::string, std::vector<Real>>>;

template <Scalar T>
void save_checkpoint(const std::filesystem::path& path, const GroupCdlParams<T>& params,
                     const ExtraTensors& extra = {});
template <Scalar T>
GroupCdlParams<T> load_checkpoint(const std::filesystem::path& path, ExtraTensors* extra = nullptr);
/// True when the checkpoint holds complex-valued banks.
bool checkpoint_is_complex(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

template <Scalar T>
std::span<Real> as_real_span(std::vector<T>& v) {
  if constexpr (is_complex_v<T>) return as_real(std::span<Complex>(v));
  else return std::span<Real>(v);
}

template <Scalar T>
template <class F>
void GroupCdlParams<T>::for_each_tensor(F&& f) {
  constexpr bool cplx = is_complex_v<T>;
  auto bank = [&](const std::string& name, ConvFilterBank<T>& bk) {
    f(TensorRef{name, as_real_span(bk.weights),
                {static_cast<std::uint32_t>(bk.subbands), static_cast<std::uint32_t>(bk.channels),
                 static_cast<std::uint32_t>(bk.taps), static_cast<std::uint32_t>(bk.taps)},
                cplx});
  };
  auto vec = [&](const std::string& name, std::vector<Real>& v) {
    f(TensorRef{name, std::span<Real>(v), {static_cast<std::uint32_t>(v.size())}, false});
  };
  auto mat = [&](const std::string& name, std::vector<Real>& v) {
    f(TensorRef{name, std::span<Real>(v),
                {static_cast<std::uint32_t>(transforms.mh), static_cast<std::uint32_t>(transforms.m)}, false});
  };
  bank("d", d);
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const std::string pre = "layers." + std::to_string(k) + ".";
    bank(pre + "a", layers[k].a);
    bank(pre + "b", layers[k].b);
    vec(pre + "tau0", layers[k].thresholds.tau0);
    vec(pre + "tau1", layers[k].thresholds.tau1);
    vec(pre + "rho", layers[k].rho);
  }
  mat("w_theta", transforms.w_theta);
  mat("w_phi", transforms.w_phi);
  mat("w_alpha", transforms.w_alpha);
  mat("w_beta", transforms.w_beta);
  f(TensorRef{"gamma", std::span<Real>(&transforms.gamma, 1), {}, false});
}

template <Scalar T>
template <class F>
void GroupCdlParams<T>::for_each_tensor(F&& f) const {
  // read-only visitors never write through the span
  const_cast<GroupCdlParams*>(this)->for_each_tensor(std::forward<F>(f));
}

}  // namespace gcdl

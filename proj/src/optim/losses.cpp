#include "groupcdl/optim/ops.hpp"
#include "groupcdl/optim/optim.hpp"

namespace gcdl {

namespace {

template <Scalar T>
std::vector<Real> reals_of(const Image<T>& x) {
  const auto r = [&] {
    if constexpr (is_complex_v<T>) return as_real(x.data());
    else return x.data();
  }();
  return std::vector<Real>(r.begin(), r.end());
}

}  // namespace

template <Scalar T>
Real mse_loss(const Image<T>& xhat, const Image<T>& x, std::vector<Real>* grad) {
  require(xhat.same_shape(x), "mse_loss: shape mismatch");
  ad::Tape t;
  const auto v = t.leaf(reals_of(xhat), ad::Shape::planes(xhat.rows(), xhat.cols(), xhat.channels(), is_complex_v<T>),
                        grad != nullptr);
  const auto l = ad::sum_squares(t, v, reals_of(x));
  if (grad) {
    t.backward(l);
    const auto g = t.grad(v);
    grad->assign(g.begin(), g.end());
  }
  return t.scalar(l);
}

template <Scalar T>
Real l1_ssim_loss(const Image<T>& xhat, const RealImage& x, Real weight, std::vector<Real>* grad) {
  ad::Tape t;
  const auto v = t.leaf(reals_of(xhat), ad::Shape::planes(xhat.rows(), xhat.cols(), xhat.channels(), is_complex_v<T>),
                        grad != nullptr);
  const auto l = ad::l1_ssim(t, v, x, weight);
  if (grad) {
    t.backward(l);
    const auto g = t.grad(v);
    grad->assign(g.begin(), g.end());
  }
  return t.scalar(l);
}

template Real mse_loss(const Image<Real>&, const Image<Real>&, std::vector<Real>*);
template Real mse_loss(const Image<Complex>&, const Image<Complex>&, std::vector<Real>*);
template Real l1_ssim_loss(const Image<Real>&, const RealImage&, Real, std::vector<Real>*);
template Real l1_ssim_loss(const Image<Complex>&, const RealImage&, Real, std::vector<Real>*);

}  // namespace gcdl

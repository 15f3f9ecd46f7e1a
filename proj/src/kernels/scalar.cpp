// Reference kernels. Every SIMD variant is tested against these.
#include "groupcdl/kernels/kernels.hpp"

namespace gcdl::kernels {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void sqdist(double k, const double* q, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double d = k - q[i];
    out[i] -= 0.5 * d * d;
  }
}

double window_dot(const double* band, const double* pad, std::size_t stride, int w1, int w2) {
  double s = 0;
  for (int a = 0; a < w1; ++a) s += dot(band + static_cast<std::size_t>(a) * w2, pad + a * stride, w2);
  return s;
}

void window_axpy(double alpha, const double* pad, std::size_t stride, int w1, int w2, double* band) {
  for (int a = 0; a < w1; ++a) axpy(alpha, pad + a * stride, band + static_cast<std::size_t>(a) * w2, w2);
}

void window_sqdist(double k, const double* pad, std::size_t stride, int w1, int w2, double* band) {
  for (int a = 0; a < w1; ++a) sqdist(k, pad + a * stride, band + static_cast<std::size_t>(a) * w2, w2);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::scalar, "scalar", window_dot, window_axpy, window_sqdist, dot, axpy, sqdist};
  return table;
}

}  // namespace gcdl::kernels

// AVX2/FMA variants, 4 doubles per lane group. Built with -mavx2 -mfma; only
// reached through the dispatch table after a CPUID check.
#include <immintrin.h>

#include "groupcdl/kernels/kernels.hpp"

namespace gcdl::kernels {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

inline __m256d dot_accum(__m256d acc, const double* a, const double* b, std::size_t n, double& tail) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
  for (; i < n; ++i) tail += a[i] * b[i];
  return acc;
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  double tail = 0;
  acc0 = dot_accum(acc0, a + i, b + i, n - i, tail);
  return hsum(_mm256_add_pd(acc0, acc1)) + tail;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void sqdist(double k, const double* q, double* out, std::size_t n) {
  const __m256d vk = _mm256_set1_pd(k);
  const __m256d vh = _mm256_set1_pd(-0.5);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(vk, _mm256_loadu_pd(q + i));
    _mm256_storeu_pd(out + i, _mm256_fmadd_pd(vh, _mm256_mul_pd(d, d), _mm256_loadu_pd(out + i)));
  }
  for (; i < n; ++i) {
    const double d = k - q[i];
    out[i] -= 0.5 * d * d;
  }
}

double window_dot(const double* band, const double* pad, std::size_t stride, int w1, int w2) {
  __m256d acc = _mm256_setzero_pd();
  double tail = 0;
  for (int a = 0; a < w1; ++a)
    acc = dot_accum(acc, band + static_cast<std::size_t>(a) * w2, pad + a * stride, w2, tail);
  return hsum(acc) + tail;
}

void window_axpy(double alpha, const double* pad, std::size_t stride, int w1, int w2, double* band) {
  for (int a = 0; a < w1; ++a) axpy(alpha, pad + a * stride, band + static_cast<std::size_t>(a) * w2, w2);
}

void window_sqdist(double k, const double* pad, std::size_t stride, int w1, int w2, double* band) {
  for (int a = 0; a < w1; ++a) sqdist(k, pad + a * stride, band + static_cast<std::size_t>(a) * w2, w2);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::avx2, "avx2", window_dot, window_axpy, window_sqdist, dot, axpy, sqdist};
  return &table;
}

}  // namespace gcdl::kernels

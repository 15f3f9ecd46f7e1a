#pragma once

#include <cstddef>
#include <string_view>

namespace gcdl::kernels {

enum class Isa { scalar, avx2 };

/// Inner loops of the circulant-sparse operators. A "window" is a w1 x w2
/// block read from a circularly padded plane with row pitch `stride`; the
/// matching band-storage row is contiguous (w1 * w2 values).
struct KernelTable {
  Isa isa;
  std::string_view name;

  /// sum_{a,b} band[a*w2 + b] * pad[a*stride + b]
  double (*window_dot)(const double* band, const double* pad, std::size_t stride, int w1, int w2);
  /// band[a*w2 + b] += alpha * pad[a*stride + b]
  void (*window_axpy)(double alpha, const double* pad, std::size_t stride, int w1, int w2, double* band);
  /// band[a*w2 + b] -= 0.5 * (k - pad[a*stride + b])^2
  void (*window_sqdist)(double k, const double* pad, std::size_t stride, int w1, int w2, double* band);

  double (*dot)(const double* a, const double* b, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  void (*sqdist)(double k, const double* q, double* out, std::size_t n);
};

const KernelTable& scalar_table();
/// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);
Isa best_isa();

/// Table used by the library. Chosen on first use from GCDL_KERNELS
/// (scalar | avx2 | auto, default auto) and the CPU.
const KernelTable& active();
/// Throws ValidationError if the ISA is unavailable on this host.
void set_active(Isa isa);
std::string_view isa_name(Isa isa);

}  // namespace gcdl::kernels

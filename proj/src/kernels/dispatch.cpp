#include <atomic>
#include <cstdlib>
#include <string>

#include "groupcdl/core/types.hpp"
#include "groupcdl/kernels/kernels.hpp"

namespace gcdl::kernels {

#if !defined(GCDL_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2:
#if defined(GCDL_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Isa best_isa() { return cpu_supports(Isa::avx2) && avx2_table() ? Isa::avx2 : Isa::scalar; }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace {

const KernelTable& table_for(Isa isa) { return isa == Isa::avx2 ? *avx2_table() : scalar_table(); }

Isa initial_isa() {
  const char* env = std::getenv("GCDL_KERNELS");
  const std::string want = env ? env : "auto";
  if (want == "scalar") return Isa::scalar;
  if (want == "avx2" && cpu_supports(Isa::avx2) && avx2_table()) return Isa::avx2;
  return best_isa();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{&table_for(initial_isa())};
  return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

void set_active(Isa isa) {
  if (isa == Isa::avx2 && !(cpu_supports(Isa::avx2) && avx2_table()))
    throw ValidationError("AVX2 kernels are not available on this host");
  slot().store(&table_for(isa), std::memory_order_release);
}

}  // namespace gcdl::kernels

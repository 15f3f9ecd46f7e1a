#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include "groupcdl/mri/mri.hpp"

namespace gcdl {

namespace {

// In-place plans keyed by (n1, n2, sign). Planning is not thread-safe in
// FFTW, executing a finished plan on new arrays is.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

  fftw_plan get(int n1, int n2, int sign) {
    const auto key = std::make_tuple(n1, n2, sign);
    {
      std::shared_lock lock(mu_);
      if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    }
    std::unique_lock lock(mu_);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* buf = fftw_alloc_complex(static_cast<std::size_t>(n1) * n2);
    // ESTIMATE never touches the buffer and gives the same plan every run
    fftw_plan p = fftw_plan_dft_2d(n1, n2, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    if (!p) throw NumericError("fftw: planning failed");
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::shared_mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void fft2(ComplexImage& x, bool inverse) {
  const int n1 = x.rows(), n2 = x.cols();
  fftw_plan p = cache().get(n1, n2, inverse ? FFTW_BACKWARD : FFTW_FORWARD);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(n1) * n2);
  for (int c = 0; c < x.channels(); ++c) {
    auto pl = x.plane(c);
    auto* d = reinterpret_cast<fftw_complex*>(pl.data());
    fftw_execute_dft(p, d, d);
    for (auto& v : pl) v *= scale;
  }
}

}  // namespace gcdl

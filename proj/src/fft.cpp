#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <tuple>

namespace modnls::detail {
namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::tuple<int, int, int>, fftw_plan> plans;

  ~PlanCache() {
    for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
  }

  // Planning is not thread-safe in FFTW; execution with the new-array
  // interface is. FFTW_ESTIMATE keeps plans (and results) deterministic.
  fftw_plan get(int d, int n, FftDir dir) {
    std::lock_guard lock(mu);
    const int sign = dir == FftDir::forward ? FFTW_FORWARD : FFTW_BACKWARD;
    auto key = std::make_tuple(d, n, sign);
    if (auto it = plans.find(key); it != plans.end()) return it->second;
    std::size_t size = 1;
    int dims[kMaxDim];
    for (int a = 0; a < d; ++a) {
      dims[a] = n;
      size *= n;
    }
    auto* buf = fftw_alloc_complex(size);
    fftw_plan p = fftw_plan_dft(d, dims, buf, buf, sign, FFTW_ESTIMATE);
    fftw_free(buf);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void dft(int d, int n, Complex* data, FftDir dir) {
  fftw_plan plan = cache().get(d, n, dir);
  auto* p = reinterpret_cast<fftw_complex*>(data);
  if (fftw_alignment_of(reinterpret_cast<double*>(p)) == 0) {
    fftw_execute_dft(plan, p, p);
    return;
  }
  std::size_t size = 1;
  for (int a = 0; a < d; ++a) size *= n;
  auto* buf = fftw_alloc_complex(size);
  std::memcpy(buf, p, size * sizeof(fftw_complex));
  fftw_execute_dft(plan, buf, buf);
  std::memcpy(p, buf, size * sizeof(fftw_complex));
  fftw_free(buf);
}

}  // namespace modnls::detail

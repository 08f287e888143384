#include "waverobe/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace waverobe {
namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are in-place, unaligned and estimated, so every call with
// the same length runs the same arithmetic.
fftw_plan plan_for(std::size_t n, bool backward) {
  static std::mutex mutex;
  static std::map<std::pair<std::size_t, bool>, fftw_plan> plans;
  std::lock_guard lock(mutex);
  auto it = plans.find({n, backward});
  if (it != plans.end()) return it->second;
  auto* scratch = fftw_alloc_complex(n);
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), scratch, scratch,
                                    backward ? FFTW_BACKWARD : FFTW_FORWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  fftw_free(scratch);
  plans.emplace(std::make_pair(n, backward), plan);
  return plan;
}

}  // namespace

void fft_inplace(std::span<std::complex<double>> data, bool backward) {
  if (data.empty()) return;
  auto* buf = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_for(data.size(), backward), buf, buf);
}

std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace waverobe

// SPDX-License-Identifier: Apache-2.0
#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace vocalplan::detail {

namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    // The planner is not thread-safe; only execution with new arrays is.
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::vector<std::complex<double>> real_dft(std::span<const double> input) {
  const std::size_t n = input.size();
  std::vector<std::complex<double>> out(n / 2 + 1);
  if (n == 0) return {};
  // fftw_execute_dft_r2c may clobber its input for some plans.
  std::vector<double> scratch(input.begin(), input.end());
  fftw_execute_dft_r2c(cache().get(n), scratch.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

}  // namespace vocalplan::detail

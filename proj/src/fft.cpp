#include "qlyap/fft.hpp"

#include <fftw3.h>

#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace qlyap::fft {
namespace {

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  fftw_plan forward_unaligned = nullptr;
  fftw_plan backward_unaligned = nullptr;
};

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plans] : plans_) {
      fftw_destroy_plan(plans.forward);
      fftw_destroy_plan(plans.backward);
      fftw_destroy_plan(plans.forward_unaligned);
      fftw_destroy_plan(plans.backward_unaligned);
    }
  }

  const PlanPair& get(int n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    // Planner scratch with the same 64-byte alignment as ComplexVector;
    // FFTW_ESTIMATE does not touch the contents.
    fftw_complex* scratch = fftw_alloc_complex(static_cast<std::size_t>(n));
    const unsigned aligned = FFTW_ESTIMATE;
    const unsigned unaligned = FFTW_ESTIMATE | FFTW_UNALIGNED;
    PlanPair p{fftw_plan_dft_1d(n, scratch, scratch, FFTW_FORWARD, aligned),
               fftw_plan_dft_1d(n, scratch, scratch, FFTW_BACKWARD, aligned),
               fftw_plan_dft_1d(n, scratch, scratch, FFTW_FORWARD, unaligned),
               fftw_plan_dft_1d(n, scratch, scratch, FFTW_BACKWARD, unaligned)};
    fftw_free(scratch);
    if (!p.forward || !p.backward || !p.forward_unaligned || !p.backward_unaligned)
      throw std::runtime_error("fftw planning failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<int, PlanPair> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

fftw_complex* as_fftw(std::span<std::complex<double>> data) {
  return reinterpret_cast<fftw_complex*>(data.data());
}

bool is_aligned(std::span<std::complex<double>> data) {
  return reinterpret_cast<std::uintptr_t>(data.data()) % 64 == 0;
}

}  // namespace

void forward(std::span<std::complex<double>> data) {
  const auto& p = cache().get(static_cast<int>(data.size()));
  fftw_execute_dft(is_aligned(data) ? p.forward : p.forward_unaligned, as_fftw(data), as_fftw(data));
}

void backward(std::span<std::complex<double>> data) {
  const auto& p = cache().get(static_cast<int>(data.size()));
  fftw_execute_dft(is_aligned(data) ? p.backward : p.backward_unaligned, as_fftw(data), as_fftw(data));
}

void inverse(std::span<std::complex<double>> data) {
  backward(data);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& z : data) z *= scale;
}

}  // namespace qlyap::fft

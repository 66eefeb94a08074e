#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>

#include "blochsim/error.hpp"

namespace blochsim {

/// In-place 1D complex FFT pair on an owned buffer. Plans use FFTW_ESTIMATE
/// so the arithmetic is fixed for a given size and results are reproducible.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    if (n < 2) throw DomainError("FFT size must be at least 2");
    buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (!buffer_) throw std::bad_alloc();
    {
      // The FFTW planner is not thread safe; execution is.
      std::lock_guard lock(planner_mutex());
      forward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
      backward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (!forward_ || !backward_) {
      release();
      throw Error("FFTW could not create a plan");
    }
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  ~FftPlan() { release(); }

  std::size_t size() const { return n_; }

  std::span<std::complex<double>> data() { return {reinterpret_cast<std::complex<double>*>(buffer_), n_}; }

  /// Unnormalized forward transform, sum_j f_j exp(-2 pi i jk/n).
  void forward() { fftw_execute(forward_); }
  /// Unnormalized backward transform; forward then backward scales by n.
  void backward() { fftw_execute(backward_); }

 private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }
  void release() {
    std::lock_guard lock(planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    if (buffer_) fftw_free(buffer_);
    forward_ = backward_ = nullptr;
    buffer_ = nullptr;
  }

  std::size_t n_;
  fftw_complex* buffer_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace blochsim

#pragma once

// Thin RAII wrapper over FFTW's complex multi-dimensional transforms.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <vector>

#include "tamed/error.hpp"

namespace tamed {

namespace detail {
// The FFTW planner is not thread safe; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace detail

/// Unnormalized DFT over a row-major array with the given shape.
/// sign = -1 forward, +1 backward.
inline std::vector<std::complex<double>> fft(std::vector<std::complex<double>> data,
                                             const std::vector<int>& shape, int sign) {
  std::size_t total = 1;
  for (int s : shape) {
    require(s >= 1, "fft: empty dimension");
    total *= static_cast<std::size_t>(s);
  }
  require(total == data.size(), "fft: shape does not match data size");
  auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buffer, buffer,
                         sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericalError("fft: FFTW could not create a plan");
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  return data;
}

/// Signed integer frequency index of DFT bin k for length n.
inline long signed_frequency(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

} // namespace tamed

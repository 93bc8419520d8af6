#pragma once

#include <fftw3.h>

#include <complex>
#include <cstring>
#include <functional>
#include <mutex>
#include <vector>

#include "shqpsk/waveform.hpp"

namespace shqpsk {
namespace detail {

/// FFTW plan creation/destruction is not thread-safe; execution of distinct
/// plans is. The suite runs scenarios concurrently, so planning takes a lock.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

/// In-place c2c transform. FFTW_ESTIMATE (heuristic planning, no measurement)
/// plus always-aligned fftw_malloc buffers keeps results byte-identical from
/// run to run, which the determinism contract depends on.
inline void fft_execute(std::vector<cplx>& data, int sign) {
  const std::size_t n = data.size();
  if (n == 0) return;
  fftw_complex* buf = fftw_alloc_complex(n);
  std::memcpy(buf, static_cast<const void*>(data.data()), n * sizeof(cplx));
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex());
    fftw_destroy_plan(plan);
  }
  std::memcpy(static_cast<void*>(data.data()), buf, n * sizeof(cplx));
  fftw_free(buf);
}

}  // namespace detail

inline void fft_forward(std::vector<cplx>& data) { detail::fft_execute(data, FFTW_FORWARD); }

inline void fft_inverse(std::vector<cplx>& data) {
  detail::fft_execute(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (cplx& s : data) s *= scale;
}

/// Signed frequency of FFT bin k for an n-point record at rate fs.
inline double bin_frequency_hz(std::size_t k, std::size_t n, double fs) {
  const std::size_t half = (n + 1) / 2;
  const double kf = static_cast<double>(k);
  return (k < half) ? kf * fs / static_cast<double>(n)
                    : (kf - static_cast<double>(n)) * fs / static_cast<double>(n);
}

/// Full-record circular filtering: multiply the spectrum by response(f_signed).
/// The record is treated as circular; callers discard a guard interval at the
/// record edges before computing metrics.
inline void apply_frequency_response(ComplexWaveform& w,
                                     const std::function<cplx(double)>& response) {
  const std::size_t n = w.samples.size();
  if (n == 0) return;
  fft_forward(w.samples);
  for (std::size_t k = 0; k < n; ++k)
    w.samples[k] *= response(bin_frequency_hz(k, n, w.sample_rate_hz));
  fft_inverse(w.samples);
}

/// Real-waveform variant. The response must be conjugate-symmetric
/// (H(-f) = conj(H(f))) for the output to stay real; the imaginary residue
/// from rounding is dropped.
inline void apply_frequency_response(RealWaveform& w,
                                     const std::function<cplx(double)>& response) {
  ComplexWaveform tmp{std::vector<cplx>(w.samples.begin(), w.samples.end()), w.sample_rate_hz};
  apply_frequency_response(tmp, response);
  for (std::size_t i = 0; i < w.samples.size(); ++i) w.samples[i] = tmp.samples[i].real();
}

/// Single-pole low-pass H(f) = 1 / (1 + j f / f3dB). f3dB = +infinity bypasses.
inline cplx single_pole_response(double f_hz, double f3db_hz) {
  if (!std::isfinite(f3db_hz)) return cplx{1.0, 0.0};
  return 1.0 / cplx{1.0, f_hz / f3db_hz};
}

}  // namespace shqpsk

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "shqpsk/errors.hpp"

namespace shqpsk {

using cplx = std::complex<double>;

/// Complex baseband waveform. Field amplitudes carry sqrt(mW) units, so
/// |sample|^2 is instantaneous optical power in mW; electrical complex
/// waveforms reuse the type with volt units.
struct ComplexWaveform {
  std::vector<cplx> samples;
  double sample_rate_hz = 0.0;
};

/// Real-valued electrical waveform (drive voltages, detected I/Q rails).
struct RealWaveform {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

/// Two co-propagating polarization components on a shared sample grid.
struct DualPolWaveform {
  ComplexWaveform x;
  ComplexWaveform y;

  std::size_t size() const { return x.samples.size(); }
  double sample_rate_hz() const { return x.sample_rate_hz; }
};

inline void require_same_grid(const ComplexWaveform& a, const ComplexWaveform& b,
                              const char* where) {
  if (a.samples.size() != b.samples.size() || a.sample_rate_hz != b.sample_rate_hz)
    throw LengthMismatchError(std::string(where) + ": waveforms disagree in length or rate");
}

inline void require_dualpol(const DualPolWaveform& f, const char* where) {
  require_same_grid(f.x, f.y, where);
  if (f.x.samples.empty()) throw EmptyInputError(std::string(where) + ": empty field");
}

/// Mean |sample|^2.
inline double mean_power(const ComplexWaveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (const cplx& s : w.samples) acc += std::norm(s);
  return acc / static_cast<double>(w.samples.size());
}

inline double mean_power(const DualPolWaveform& f) {
  return mean_power(f.x) + mean_power(f.y);
}

/// Total energy sum |sample|^2 (no dt weighting; used for conservation checks).
inline double total_energy(const ComplexWaveform& w) {
  double acc = 0.0;
  for (const cplx& s : w.samples) acc += std::norm(s);
  return acc;
}

inline double mean_value(const RealWaveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s;
  return acc / static_cast<double>(w.samples.size());
}

inline double rms(const ComplexWaveform& w) {
  return std::sqrt(mean_power(w));
}

inline double rms(const RealWaveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double db_to_field(double db) { return std::pow(10.0, -db / 20.0); }
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace shqpsk

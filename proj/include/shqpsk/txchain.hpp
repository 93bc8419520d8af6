#pragma once

#include <cmath>
#include <numbers>

#include "shqpsk/fft.hpp"
#include "shqpsk/rng.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

struct LaserConfig {
  double power_dbm = 13.4;
  double wavelength_nm = 1550.0;
  double linewidth_hz = 0.0;
};

struct ModulatorConfig {
  double v_pi_volts = 3.5;
  double insertion_loss_db = 6.0;
  /// Fraction of laser power routed to the modulated path; the remainder is
  /// the unmodulated carrier that later serves as the receiver's LO.
  double carrier_split_ratio = 0.5;
};

struct DriverConfig {
  /// Single-pole -3 dB corner. +infinity bypasses the filter.
  double f3db_hz = 7.0e9;
  /// Voltage gain applied before the pole.
  double gain_v_per_v = 1.0;
};

/// CW laser field with Wiener (random-walk) phase noise. |E[n]|^2 equals the
/// configured power in mW for every sample; the per-sample phase increment is
/// Gaussian with variance 2*pi*linewidth/sample_rate, the discrete-time
/// Lorentzian-linewidth model. linewidth 0 gives a constant zero-phase field.
inline ComplexWaveform laser_field(const LaserConfig& cfg, std::size_t n_samples,
                                   double sample_rate_hz, std::uint64_t seed) {
  if (n_samples == 0) throw EmptyInputError("laser_field: n_samples == 0");
  if (sample_rate_hz <= 0.0) throw ConfigError("laser_field: sample_rate must be > 0");
  if (cfg.linewidth_hz < 0.0) throw ConfigError("laser_field: negative linewidth");
  const double amp = std::sqrt(dbm_to_mw(cfg.power_dbm));
  ComplexWaveform w;
  w.sample_rate_hz = sample_rate_hz;
  w.samples.resize(n_samples);
  if (cfg.linewidth_hz == 0.0) {
    for (cplx& s : w.samples) s = cplx{amp, 0.0};
    return w;
  }
  const double sigma = std::sqrt(2.0 * std::numbers::pi * cfg.linewidth_hz / sample_rate_hz);
  Rng rng(seed);
  double phase = 0.0;
  for (std::size_t n = 0; n < n_samples; ++n) {
    w.samples[n] = amp * cplx{std::cos(phase), std::sin(phase)};
    phase += sigma * rng.gaussian();
  }
  return w;
}

/// Nested (IQ) Mach-Zehnder modulator, both children at the null bias point:
///   E_out = (E_in / 2) * [sin(pi v_I / (2 v_pi)) + j sin(pi v_Q / (2 v_pi))] * IL
/// Drives of +-v_pi/2 land the four QPSK points at 45/135/225/315 degrees.
inline ComplexWaveform mzm_iq_modulate(const ComplexWaveform& field, const RealWaveform& v_i,
                                       const RealWaveform& v_q, const ModulatorConfig& cfg) {
  if (field.samples.size() != v_i.samples.size() ||
      field.samples.size() != v_q.samples.size())
    throw LengthMismatchError("mzm_iq_modulate: drive/field lengths differ");
  if (cfg.v_pi_volts <= 0.0) throw ConfigError("mzm_iq_modulate: v_pi must be > 0");
  const double il = db_to_field(cfg.insertion_loss_db);
  const double k = std::numbers::pi / (2.0 * cfg.v_pi_volts);
  ComplexWaveform out;
  out.sample_rate_hz = field.sample_rate_hz;
  out.samples.resize(field.samples.size());
  for (std::size_t n = 0; n < field.samples.size(); ++n) {
    const cplx m{std::sin(k * v_i.samples[n]), std::sin(k * v_q.samples[n])};
    out.samples[n] = field.samples[n] * 0.5 * m * il;
  }
  return out;
}

/// Electrical driver: gain, then a single-pole low-pass applied as a circular
/// full-record frequency response. Models the drive amplifier's high-frequency
/// roll-off, the transmitter-side bandwidth limit the receive equalizer must
/// undo.
inline RealWaveform driver_lowpass(const RealWaveform& wave, const DriverConfig& cfg) {
  if (wave.samples.empty()) throw EmptyInputError("driver_lowpass: empty waveform");
  if (!(cfg.f3db_hz > 0.0)) throw ConfigError("driver_lowpass: f3dB must be > 0");
  RealWaveform out = wave;
  for (double& s : out.samples) s *= cfg.gain_v_per_v;
  if (std::isfinite(cfg.f3db_hz))
    apply_frequency_response(
        out, [&](double f) { return single_pole_response(f, cfg.f3db_hz); });
  return out;
}

/// Combine the modulated signal (X) and the unmodulated carrier (Y) onto
/// orthogonal polarizations of one fiber.
inline DualPolWaveform pol_mux(ComplexWaveform signal, ComplexWaveform carrier) {
  require_same_grid(signal, carrier, "pol_mux");
  if (signal.samples.empty()) throw EmptyInputError("pol_mux: empty inputs");
  return DualPolWaveform{std::move(signal), std::move(carrier)};
}

/// Split a laser field into modulated-path and carrier-path inputs according
/// to the power split ratio.
inline void split_carrier(const ComplexWaveform& laser, double split_ratio,
                          ComplexWaveform& to_modulator, ComplexWaveform& to_carrier) {
  if (split_ratio <= 0.0 || split_ratio >= 1.0)
    throw ConfigError("split_carrier: split ratio must lie in (0, 1)");
  const double a = std::sqrt(split_ratio);
  const double b = std::sqrt(1.0 - split_ratio);
  to_modulator.sample_rate_hz = laser.sample_rate_hz;
  to_carrier.sample_rate_hz = laser.sample_rate_hz;
  to_modulator.samples.resize(laser.samples.size());
  to_carrier.samples.resize(laser.samples.size());
  for (std::size_t n = 0; n < laser.samples.size(); ++n) {
    to_modulator.samples[n] = laser.samples[n] * a;
    to_carrier.samples[n] = laser.samples[n] * b;
  }
}

}  // namespace shqpsk

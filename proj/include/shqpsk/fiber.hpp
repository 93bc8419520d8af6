#pragma once

#include <cmath>
#include <numbers>

#include "shqpsk/fft.hpp"
#include "shqpsk/jones.hpp"
#include "shqpsk/rng.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPlanck = 6.62607015e-34;     // J s

struct FiberConfig {
  double length_km = 0.0;
  double dispersion_ps_nm_km = 17.0;
  double attenuation_db_km = 0.2;
  double wavelength_nm = 1550.0;
};

struct EdfaConfig {
  bool enabled = false;
  double gain_db = 16.0;
  double noise_figure_db = 5.0;
};

/// beta2 in s^2/m from the dispersion parameter D.
inline double beta2_s2_per_m(const FiberConfig& cfg) {
  const double d_si = cfg.dispersion_ps_nm_km * 1e-6;  // ps/(nm km) -> s/m^2
  const double lambda = cfg.wavelength_nm * 1e-9;
  return -d_si * lambda * lambda / (2.0 * std::numbers::pi * kSpeedOfLight);
}

/// All-pass chromatic dispersion H(w) = exp(-j (beta2/2) w^2 L), applied in
/// the frequency domain to both polarizations. Unit magnitude at every
/// frequency, so field energy is conserved; negating D inverts the operator.
inline DualPolWaveform apply_cd(DualPolWaveform f, const FiberConfig& cfg) {
  require_dualpol(f, "apply_cd");
  if (cfg.length_km < 0.0) throw ConfigError("apply_cd: negative length");
  if (cfg.length_km == 0.0) return f;
  const double coeff = -0.5 * beta2_s2_per_m(cfg) * cfg.length_km * 1e3;
  const auto response = [&](double f_hz) {
    const double w = 2.0 * std::numbers::pi * f_hz;
    return std::polar(1.0, coeff * w * w);
  };
  apply_frequency_response(f.x, response);
  apply_frequency_response(f.y, response);
  return f;
}

/// Flat fiber loss: field scale 10^(-alpha L / 20) on both polarizations.
inline DualPolWaveform attenuate(DualPolWaveform f, const FiberConfig& cfg) {
  require_dualpol(f, "attenuate");
  if (cfg.length_km < 0.0 || cfg.attenuation_db_km < 0.0)
    throw ConfigError("attenuate: negative length or attenuation");
  const double scale = db_to_field(cfg.attenuation_db_km * cfg.length_km);
  for (cplx& s : f.x.samples) s *= scale;
  for (cplx& s : f.y.samples) s *= scale;
  return f;
}

/// EDFA: field gain sqrt(G) plus circular complex white ASE on each
/// polarization. ASE PSD per polarization S = (G-1) n_sp h nu with
/// n_sp = 10^(NF/10)/2; sampled white over the simulation bandwidth, so the
/// per-sample complex variance is S * fs (converted W -> mW to match the
/// field-amplitude units).
inline DualPolWaveform edfa_amplify(DualPolWaveform f, const EdfaConfig& cfg,
                                    std::uint64_t seed, double wavelength_nm = 1550.0) {
  require_dualpol(f, "edfa_amplify");
  if (!cfg.enabled) throw AmplifierDisabledError("edfa_amplify: amplifier is disabled");
  if (cfg.gain_db < 0.0) throw ConfigError("edfa_amplify: negative gain");
  const double gain = db_to_lin(cfg.gain_db);
  const double scale = std::sqrt(gain);
  const double nsp = db_to_lin(cfg.noise_figure_db) / 2.0;
  const double nu = kSpeedOfLight / (wavelength_nm * 1e-9);
  const double psd_w_hz = (gain - 1.0) * nsp * kPlanck * nu;
  const double var_mw = psd_w_hz * f.sample_rate_hz() * 1e3;
  const double sigma_quad = std::sqrt(var_mw / 2.0);  // per quadrature
  Rng rng(seed);
  for (cplx& s : f.x.samples)
    s = s * scale + sigma_quad * cplx{rng.gaussian(), rng.gaussian()};
  for (cplx& s : f.y.samples)
    s = s * scale + sigma_quad * cplx{rng.gaussian(), rng.gaussian()};
  return f;
}

}  // namespace shqpsk

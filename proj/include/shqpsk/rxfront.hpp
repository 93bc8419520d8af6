#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "shqpsk/fft.hpp"
#include "shqpsk/jones.hpp"
#include "shqpsk/rng.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

struct ReceiverConfig {
  double responsivity_a_w = 0.8;
  double thermal_noise_a_rthz = 20e-12;
  double electrical_bandwidth_hz = 16e9;
  double tia_transimpedance_v_a = 500.0;
  double agc_target_vpp = 0.4;
};

enum class PolObjective { max_power_ratio, min_carrier_intensity_variance };

struct PolSearchResult {
  JonesMatrix matrix;
  /// Achieved power ratio between the PBS outputs, 10 log10(P_y / P_x).
  double extinction_db = 0.0;
  /// Accepted coordinate-descent steps, summed over restarts.
  int iterations = 0;
  /// Objective value after each accepted step (non-decreasing).
  std::vector<double> objective_trace;
};

namespace detail {

/// Time-averaged 2x2 coherency matrix over a capped window, Kahan-compensated
/// so the accumulation error stays near machine epsilon: the search's accept
/// decisions must not wobble with summation noise.
struct Coherency {
  double pxx = 0.0, pyy = 0.0;
  cplx pxy{0.0, 0.0};
};

inline Coherency coherency_matrix(const DualPolWaveform& f, std::size_t window) {
  const std::size_t n = std::min(f.size(), window);
  double sxx = 0.0, cxx = 0.0, syy = 0.0, cyy = 0.0;
  double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0;
  auto kahan = [](double& sum, double& comp, double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const cplx x = f.x.samples[k], y = f.y.samples[k];
    kahan(sxx, cxx, std::norm(x));
    kahan(syy, cyy, std::norm(y));
    const cplx xy = x * std::conj(y);
    kahan(sr, cr, xy.real());
    kahan(si, ci, xy.imag());
  }
  const double inv = 1.0 / static_cast<double>(n);
  return Coherency{sxx * inv, syy * inv, cplx{sr * inv, si * inv}};
}

/// P_y of the rotated field from the coherency matrix: r C r^H with r the
/// second (carrier-port) row of V.
inline double port_power_y(const Coherency& c, const JonesMatrix& v) {
  const cplx a = v.yx, b = v.yy;
  return std::norm(a) * c.pxx + std::norm(b) * c.pyy +
         2.0 * (a * std::conj(b) * c.pxy).real();
}

inline double port_power_x(const Coherency& c, const JonesMatrix& v) {
  const cplx a = v.xx, b = v.xy;
  return std::norm(a) * c.pxx + std::norm(b) * c.pyy +
         2.0 * (a * std::conj(b) * c.pxy).real();
}

/// Normalized intensity variance of the carrier port, Var(|y|^2)/mean(|y|^2)^2,
/// over a capped window. A clean CW carrier port drives this to zero.
inline double carrier_intensity_nvar(const DualPolWaveform& f, const JonesMatrix& v,
                                     std::size_t window) {
  const std::size_t n = std::min(f.size(), window);
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double p = std::norm(v.yx * f.x.samples[k] + v.yy * f.y.samples[k]);
    s1 += p;
    s2 += p * p;
  }
  const double m = s1 / static_cast<double>(n);
  const double var = s2 / static_cast<double>(n) - m * m;
  if (m <= 0.0) return std::numeric_limits<double>::infinity();
  return var / (m * m);
}

}  // namespace detail

/// Automated polarization control: derivative-free coordinate descent over the
/// three-angle unitary parametrization, emulating the bench procedure of
/// turning a polarization controller while watching the port powers.
///
/// Objectives (both maximized internally):
///   max_power_ratio              f = P_y / P_x     (carrier is the stronger
///                                                   component and ends on Y)
///   min_carrier_intensity_variance  f = -Var(|y|^2)/mean(|y|^2)^2
///
/// A step is accepted only when it improves the incumbent by a relative margin
/// (1e-12): accept decisions — and therefore the whole search path and the
/// returned matrix — are then bit-stable against sub-1e-12 perturbations of
/// the input field, e.g. a laser-phase factor that cancels in the powers.
/// Steps shrink from 0.5 rad by halving once a sweep yields no acceptance,
/// down to 1e-12 rad; four start points cover the restart requirement.
inline PolSearchResult pol_control_search(
    const DualPolWaveform& field, PolObjective objective = PolObjective::max_power_ratio) {
  require_dualpol(field, "pol_control_search");
  constexpr std::size_t kPowerWindow = 65536;
  constexpr std::size_t kVarWindow = 16384;
  const detail::Coherency c = detail::coherency_matrix(field, kPowerWindow);
  if (c.pxx + c.pyy <= 0.0)
    throw ZeroPowerError("pol_control_search: field has zero power");

  const auto evaluate = [&](const std::array<double, 3>& a) {
    const JonesMatrix v = JonesMatrix::from_angles(a[0], a[1], a[2]);
    if (objective == PolObjective::max_power_ratio) {
      const double px = detail::port_power_x(c, v);
      const double py = detail::port_power_y(c, v);
      if (px <= 0.0) return std::numeric_limits<double>::infinity();
      return py / px;
    }
    return -detail::carrier_intensity_nvar(field, v, kVarWindow);
  };
  const auto improves = [](double next, double best) {
    return next > best + 1e-12 * std::max(std::abs(best), 1e-30);
  };

  const std::array<std::array<double, 3>, 4> starts{{
      {0.0, 0.0, 0.0},
      {std::numbers::pi / 4.0, 0.0, 0.0},
      {std::numbers::pi / 4.0, std::numbers::pi / 2.0, 0.0},
      {std::numbers::pi / 4.0, 0.0, std::numbers::pi / 2.0},
  }};

  PolSearchResult result;
  std::array<double, 3> best_angles{0.0, 0.0, 0.0};
  double best_f = -std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    std::array<double, 3> a = start;
    double f = evaluate(a);
    result.objective_trace.push_back(std::max(f, best_f));
    double step = 0.5;
    while (step >= 1e-12) {
      bool accepted_any = false;
      for (int coord = 0; coord < 3; ++coord) {
        for (double dir : {+1.0, -1.0}) {
          std::array<double, 3> trial = a;
          trial[coord] += dir * step;
          const double ft = evaluate(trial);
          if (improves(ft, f)) {
            a = trial;
            f = ft;
            ++result.iterations;
            if (f > best_f) result.objective_trace.push_back(f);
            accepted_any = true;
            break;  // greedy: re-sweep from the new base point
          }
        }
      }
      if (!accepted_any) step *= 0.5;
    }
    if (f > best_f) {
      best_f = f;
      best_angles = a;
    }
  }

  JonesMatrix j = JonesMatrix::from_angles(best_angles[0], best_angles[1], best_angles[2]);
  // Y is the designated carrier (LO) port; flip rows if the search left the
  // stronger port on X (can only happen for the variance objective).
  double px = detail::port_power_x(c, j);
  double py = detail::port_power_y(c, j);
  if (px > py) {
    j = JonesMatrix::swap_ports().compose(j);
    std::swap(px, py);
  }
  result.matrix = j;
  result.extinction_db = 10.0 * std::log10(py / px);
  return result;
}

struct DetectedIq {
  RealWaveform i;
  RealWaveform q;
};

/// 90-degree optical hybrid + balanced photodiode pair + TIA:
///   i = R * Re{E_s conj(E_lo)} * 1e-3 * Z_tia,  q likewise from Im{...}
/// (1e-3 converts the sqrt-mW field product to watts for the A/W
/// responsivity). The conjugate product is what cancels laser phase noise:
/// signal and LO carry the identical phase trajectory, which drops out of
/// E_s conj(E_lo) exactly. Thermal noise is white Gaussian input-referred
/// current of the configured density; both rails then pass a single-pole
/// low-pass at the electrical bandwidth.
inline DetectedIq hybrid_balanced_detect(const ComplexWaveform& signal,
                                         const ComplexWaveform& lo,
                                         const ReceiverConfig& cfg, std::uint64_t seed) {
  require_same_grid(signal, lo, "hybrid_balanced_detect");
  if (signal.samples.empty()) throw EmptyInputError("hybrid_balanced_detect: empty input");
  if (!(cfg.electrical_bandwidth_hz > 0.0))
    throw ConfigError("hybrid_balanced_detect: electrical bandwidth must be > 0");
  const std::size_t n = signal.samples.size();
  const double fs = signal.sample_rate_hz;
  DetectedIq out;
  out.i.sample_rate_hz = out.q.sample_rate_hz = fs;
  out.i.samples.resize(n);
  out.q.samples.resize(n);
  const double r = cfg.responsivity_a_w * 1e-3;  // A per (sqrt-mW)^2 product
  for (std::size_t k = 0; k < n; ++k) {
    const cplx beat = signal.samples[k] * std::conj(lo.samples[k]);
    out.i.samples[k] = r * beat.real();
    out.q.samples[k] = r * beat.imag();
  }
  if (cfg.thermal_noise_a_rthz > 0.0) {
    const double sigma = cfg.thermal_noise_a_rthz * std::sqrt(fs / 2.0);
    Rng rng(seed);
    for (std::size_t k = 0; k < n; ++k) {
      out.i.samples[k] += sigma * rng.gaussian();
      out.q.samples[k] += sigma * rng.gaussian();
    }
  }
  if (std::isfinite(cfg.electrical_bandwidth_hz)) {
    const auto lp = [&](double f) {
      return single_pole_response(f, cfg.electrical_bandwidth_hz);
    };
    apply_frequency_response(out.i, lp);
    apply_frequency_response(out.q, lp);
  }
  for (std::size_t k = 0; k < n; ++k) {
    out.i.samples[k] *= cfg.tia_transimpedance_v_a;
    out.q.samples[k] *= cfg.tia_transimpedance_v_a;
  }
  return out;
}

/// AGC: remove the mean, then scale so the 0.1st..99.9th percentile span of
/// the record equals target_vpp. Gain only — deliberately scale-invariant, the
/// way a peak-detecting VGA holds a rail at a fixed swing.
inline RealWaveform agc_normalize(const RealWaveform& wave, double target_vpp) {
  if (wave.samples.empty()) throw EmptyInputError("agc_normalize: empty waveform");
  if (!(target_vpp > 0.0)) throw ConfigError("agc_normalize: target must be > 0");
  const double mean = mean_value(wave);
  std::vector<double> centered(wave.samples.size());
  for (std::size_t k = 0; k < centered.size(); ++k) centered[k] = wave.samples[k] - mean;
  std::vector<double> sorted = centered;
  const auto quantile_index = [&](double q) {
    return static_cast<std::size_t>(
        std::llround(q * static_cast<double>(sorted.size() - 1)));
  };
  const std::size_t k_lo = quantile_index(0.001);
  const std::size_t k_hi = quantile_index(0.999);
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k_lo), sorted.end());
  const double lo = sorted[k_lo];
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(k_hi), sorted.end());
  const double hi = sorted[k_hi];
  const double span = hi - lo;
  if (!(span > 0.0))
    throw DegenerateSignalError("agc_normalize: percentile span is zero");
  const double scale = target_vpp / span;
  RealWaveform out;
  out.sample_rate_hz = wave.sample_rate_hz;
  out.samples.resize(centered.size());
  for (std::size_t k = 0; k < centered.size(); ++k) out.samples[k] = centered[k] * scale;
  return out;
}

}  // namespace shqpsk

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "shqpsk/waveform.hpp"

namespace shqpsk {

/// The four FIR branches of a 2x2 butterfly equalizer. h_xy feeds the Y input
/// into the X output, etc.; all branches share one length and tap spacing.
struct ButterflyTaps {
  std::vector<cplx> h_xx, h_xy, h_yx, h_yy;
};

struct EqConfig {
  /// Continuous-time adaptation gain in 1/s; the per-sample step is
  /// mu / sample_rate. The default converges in tens of microseconds at the
  /// simulated rates — slow enough to emulate an analog control loop.
  double mu = 5e6;
  /// CMA target modulus A: taps adapt to push |output| toward A.
  double target_a = 1.0;
  std::size_t n_taps = 2;
  /// Delay between taps; must be an integer number of samples at the
  /// processing rate (20 ps at 100 GS/s = 2 samples).
  double tap_spacing_s = 20e-12;
  /// Per-step tap decay (0 = pure integrator), as in a leaky analog memory.
  double leak = 0.0;
  /// Any tap magnitude beyond this aborts the run as diverged.
  double tap_ceiling = 1e3;
  /// Samples dropped from the returned outputs (adaptation still runs
  /// through them); lets callers discard the convergence transient.
  std::size_t warmup_samples = 0;
  /// Cost/trajectory recording interval in samples.
  std::size_t trajectory_stride = 2048;
};

struct EqRunResult {
  ComplexWaveform x_eq, y_eq;
  ButterflyTaps final_taps;
  /// Mean X-lane modulus error (A^2 - |x|^2)^2 per stride block, covering the
  /// whole run including warmup — the convergence transient is visible here.
  std::vector<double> cost_trace;
  /// Tap snapshots at each stride boundary, one per cost_trace entry.
  std::vector<ButterflyTaps> tap_trajectory;
  std::size_t warmup_samples = 0;
};

/// Center-spike initialization: identity pass-through on the leading tap of
/// the direct branches, everything else zero.
inline ButterflyTaps reset_taps(const EqConfig& cfg) {
  if (cfg.n_taps < 1) throw ConfigError("reset_taps: need at least one tap");
  ButterflyTaps t;
  t.h_xx.assign(cfg.n_taps, cplx{0.0, 0.0});
  t.h_xy.assign(cfg.n_taps, cplx{0.0, 0.0});
  t.h_yx.assign(cfg.n_taps, cplx{0.0, 0.0});
  t.h_yy.assign(cfg.n_taps, cplx{0.0, 0.0});
  t.h_xx[0] = cplx{1.0, 0.0};
  t.h_yy[0] = cplx{1.0, 0.0};
  return t;
}

/// Mean CMA cost (A^2 - |s|^2)^2 of a waveform.
inline double cma_cost(const ComplexWaveform& w, double target_a = 1.0) {
  if (w.samples.empty()) return 0.0;
  const double a2 = target_a * target_a;
  double acc = 0.0;
  for (const cplx& s : w.samples) {
    const double e = a2 - std::norm(s);
    acc += e * e;
  }
  return acc / static_cast<double>(w.samples.size());
}

/// Sample-by-sample constant-modulus butterfly equalizer.
///
/// Each step computes the two outputs from the tapped delay lines, then moves
/// every tap along the negative modulus-error gradient:
///
///   e_p   = out_p * (A^2 - |out_p|^2)
///   h_pq <- (1 - leak) * h_pq + (mu/fs) * e_p * conj(u_q_delayed)
///
/// which is the steepest-descent step on J = sum_p (A^2 - |out_p|^2)^2 with
/// gain mu/(4 fs) per real parameter — the continuous gradient flow an analog
/// multiplier-and-integrator loop implements, discretized at the sample rate.
class CmaEqualizer {
 public:
  CmaEqualizer(const EqConfig& cfg, double sample_rate_hz) : cfg_(cfg) {
    if (cfg.n_taps < 1) throw ConfigError("CmaEqualizer: need at least one tap");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("CmaEqualizer: bad sample rate");
    if (cfg.mu < 0.0) throw ConfigError("CmaEqualizer: mu must be >= 0");
    if (!(cfg.target_a > 0.0)) throw ConfigError("CmaEqualizer: target modulus must be > 0");
    if (cfg.leak < 0.0 || cfg.leak >= 1.0)
      throw ConfigError("CmaEqualizer: leak must be in [0, 1)");
    const double ratio = cfg.tap_spacing_s * sample_rate_hz;
    const long long rounded = std::llround(ratio);
    if (rounded < 1 || std::abs(ratio - static_cast<double>(rounded)) > 1e-9 * std::max(1.0, ratio))
      throw TapSpacingError(
          "CmaEqualizer: tap spacing " + std::to_string(cfg.tap_spacing_s) +
          " s is not a positive integer number of samples at " +
          std::to_string(sample_rate_hz) + " Hz");
    spacing_samples_ = static_cast<std::size_t>(rounded);
    mu_dt_ = cfg.mu / sample_rate_hz;
    span_ = (cfg.n_taps - 1) * spacing_samples_ + 1;
    buf_x_.resize(span_);
    buf_y_.resize(span_);
    reset();
  }

  /// Back to the center-spike taps with cleared delay lines.
  void reset() {
    taps_ = reset_taps(cfg_);
    std::fill(buf_x_.begin(), buf_x_.end(), cplx{0.0, 0.0});
    std::fill(buf_y_.begin(), buf_y_.end(), cplx{0.0, 0.0});
    pos_ = 0;
  }

  const ButterflyTaps& taps() const { return taps_; }

  void set_taps(const ButterflyTaps& t) {
    const std::size_t n = cfg_.n_taps;
    if (t.h_xx.size() != n || t.h_xy.size() != n || t.h_yx.size() != n || t.h_yy.size() != n)
      throw LengthMismatchError("CmaEqualizer::set_taps: wrong tap count");
    taps_ = t;
  }

  double mu_dt() const { return mu_dt_; }
  std::size_t spacing_samples() const { return spacing_samples_; }
  const EqConfig& config() const { return cfg_; }

  /// Push one input sample pair, return the equalized pair, and (unless
  /// adapt is false) apply one gradient step to the taps.
  std::pair<cplx, cplx> step(cplx ux, cplx uy, bool adapt = true) {
    buf_x_[pos_] = ux;
    buf_y_[pos_] = uy;
    cplx out_x{0.0, 0.0}, out_y{0.0, 0.0};
    for (std::size_t k = 0; k < cfg_.n_taps; ++k) {
      const std::size_t idx = (pos_ + span_ - k * spacing_samples_) % span_;
      const cplx dx = buf_x_[idx], dy = buf_y_[idx];
      out_x += taps_.h_xx[k] * dx + taps_.h_xy[k] * dy;
      out_y += taps_.h_yx[k] * dx + taps_.h_yy[k] * dy;
    }
    if (adapt) {
      const double a2 = cfg_.target_a * cfg_.target_a;
      const cplx err_x = out_x * (a2 - std::norm(out_x));
      const cplx err_y = out_y * (a2 - std::norm(out_y));
      const double keep = 1.0 - cfg_.leak;
      double max_norm = 0.0;
      for (std::size_t k = 0; k < cfg_.n_taps; ++k) {
        const std::size_t idx = (pos_ + span_ - k * spacing_samples_) % span_;
        const cplx cx = std::conj(buf_x_[idx]), cy = std::conj(buf_y_[idx]);
        taps_.h_xx[k] = keep * taps_.h_xx[k] + mu_dt_ * err_x * cx;
        taps_.h_xy[k] = keep * taps_.h_xy[k] + mu_dt_ * err_x * cy;
        taps_.h_yx[k] = keep * taps_.h_yx[k] + mu_dt_ * err_y * cx;
        taps_.h_yy[k] = keep * taps_.h_yy[k] + mu_dt_ * err_y * cy;
        max_norm = std::max({max_norm, std::norm(taps_.h_xx[k]), std::norm(taps_.h_xy[k]),
                             std::norm(taps_.h_yx[k]), std::norm(taps_.h_yy[k])});
      }
      // !(<=) also trips on NaN taps.
      if (!(max_norm <= cfg_.tap_ceiling * cfg_.tap_ceiling))
        throw DivergenceError("CmaEqualizer: tap magnitude exceeded ceiling " +
                              std::to_string(cfg_.tap_ceiling));
    }
    pos_ = (pos_ + 1) % span_;
    return {out_x, out_y};
  }

 private:
  EqConfig cfg_;
  ButterflyTaps taps_;
  std::vector<cplx> buf_x_, buf_y_;
  std::size_t pos_ = 0;
  std::size_t span_ = 1;
  std::size_t spacing_samples_ = 1;
  double mu_dt_ = 0.0;
};

/// Run the butterfly equalizer over a dual-input record starting from taps0.
/// When adapt is set, adaptation covers every sample; the first
/// warmup_samples outputs are dropped from the returned waveforms so callers
/// see only the converged tail.
inline EqRunResult equalizer_run(const ComplexWaveform& ux, const ComplexWaveform& uy,
                                 const EqConfig& cfg, const ButterflyTaps& taps0,
                                 bool adapt = true) {
  require_same_grid(ux, uy, "equalizer_run");
  if (ux.samples.empty()) throw EmptyInputError("equalizer_run: empty input");
  const std::size_t n = ux.samples.size();
  if (cfg.warmup_samples >= n)
    throw ConfigError("equalizer_run: warmup_samples must be smaller than the input");
  if (cfg.trajectory_stride < 1)
    throw ConfigError("equalizer_run: trajectory_stride must be >= 1");

  CmaEqualizer eq(cfg, ux.sample_rate_hz);
  eq.set_taps(taps0);
  EqRunResult result;
  result.warmup_samples = cfg.warmup_samples;
  result.x_eq.sample_rate_hz = result.y_eq.sample_rate_hz = ux.sample_rate_hz;
  result.x_eq.samples.reserve(n - cfg.warmup_samples);
  result.y_eq.samples.reserve(n - cfg.warmup_samples);

  const double a2 = cfg.target_a * cfg.target_a;
  double cost_acc = 0.0;
  std::size_t block_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [x, y] = eq.step(ux.samples[i], uy.samples[i], adapt);
    if (i >= cfg.warmup_samples) {
      result.x_eq.samples.push_back(x);
      result.y_eq.samples.push_back(y);
    }
    const double e = a2 - std::norm(x);
    cost_acc += e * e;
    if (++block_count == cfg.trajectory_stride) {
      result.cost_trace.push_back(cost_acc / static_cast<double>(block_count));
      result.tap_trajectory.push_back(eq.taps());
      cost_acc = 0.0;
      block_count = 0;
    }
  }
  if (block_count > 0) {
    result.cost_trace.push_back(cost_acc / static_cast<double>(block_count));
    result.tap_trajectory.push_back(eq.taps());
  }
  result.final_taps = eq.taps();
  return result;
}

/// Convenience overload: start from the center-spike reset taps, adapting.
inline EqRunResult equalizer_run(const ComplexWaveform& ux, const ComplexWaveform& uy,
                                 const EqConfig& cfg) {
  return equalizer_run(ux, uy, cfg, reset_taps(cfg), true);
}

}  // namespace shqpsk

#include "shqpsk/txchain.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "shqpsk/rng.hpp"

using namespace shqpsk;

namespace {
constexpr double kFs = 100e9;
}

TEST(Laser, ZeroLinewidthIsConstantZeroPhase) {
  const ComplexWaveform w = laser_field({13.4, 1550.0, 0.0}, 1000, kFs, 1);
  // 13.4 dBm -> 10^1.34 mW; frozen independently evaluated value.
  const double expect_mw = 21.87761623949553;
  for (const cplx& s : w.samples) {
    EXPECT_NEAR(std::norm(s), expect_mw, 1e-12 * expect_mw);
    EXPECT_DOUBLE_EQ(s.imag(), 0.0);
  }
  EXPECT_EQ(w.samples[0], w.samples[999]);
}

TEST(Laser, PowerConservedUnderPhaseNoise) {
  const ComplexWaveform w = laser_field({10.0, 1550.0, 10e6}, 20000, kFs, 99);
  const double expect_mw = 10.0;
  for (const cplx& s : w.samples) EXPECT_NEAR(std::norm(s), expect_mw, 1e-12 * expect_mw);
}

TEST(Laser, WienerIncrementVariance) {
  // Sample variance of the unwrapped phase increments matches
  // 2*pi*linewidth/fs = 6.283185307e-4 rad^2 at 10 MHz / 100 GS/s.
  const std::size_t n = 100000;
  const ComplexWaveform w = laser_field({0.0, 1550.0, 10e6}, n, kFs, 1234);
  double mean = 0.0;
  std::vector<double> d(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double dp = std::arg(w.samples[k + 1] * std::conj(w.samples[k]));
    d[k] = dp;
    mean += dp;
  }
  mean /= static_cast<double>(d.size());
  double var = 0.0;
  for (double v : d) var += (v - mean) * (v - mean);
  var /= static_cast<double>(d.size() - 1);
  EXPECT_NEAR(var, 6.283185307179586e-4, 0.05 * 6.283185307179586e-4);
}

TEST(Laser, DeterministicPerSeed) {
  const ComplexWaveform a = laser_field({13.4, 1550.0, 1e6}, 5000, kFs, 7);
  const ComplexWaveform b = laser_field({13.4, 1550.0, 1e6}, 5000, kFs, 7);
  const ComplexWaveform c = laser_field({13.4, 1550.0, 1e6}, 5000, kFs, 8);
  EXPECT_EQ(a.samples, b.samples);
  EXPECT_NE(a.samples, c.samples);
}

TEST(Mzm, QuadrantPhasesAtHalfVpiDrive) {
  const double vpi = 3.5;
  ComplexWaveform field{{cplx{2.0, 0.0}, cplx{2.0, 0.0}, cplx{2.0, 0.0}, cplx{2.0, 0.0}},
                        kFs};
  RealWaveform vi{{vpi / 2, vpi / 2, -vpi / 2, -vpi / 2}, kFs};
  RealWaveform vq{{vpi / 2, -vpi / 2, vpi / 2, -vpi / 2}, kFs};
  const ComplexWaveform out = mzm_iq_modulate(field, vi, vq, {vpi, 0.0, 0.5});
  const double expect_deg[4] = {45.0, -45.0, 135.0, -135.0};
  for (int k = 0; k < 4; ++k) {
    EXPECT_NEAR(std::arg(out.samples[k]) * 180.0 / std::numbers::pi, expect_deg[k], 1e-9);
    // |sin(pi/4) + j sin(pi/4)| = 1, so |E_out| = |E_in| / 2 at zero IL.
    EXPECT_NEAR(std::abs(out.samples[k]), 1.0, 1e-12);
  }
}

TEST(Mzm, ZeroDriveExtinguishes) {
  ComplexWaveform field{{cplx{1.5, 0.3}}, kFs};
  RealWaveform z{{0.0}, kFs};
  const ComplexWaveform out = mzm_iq_modulate(field, z, z, {3.5, 6.0, 0.5});
  EXPECT_NEAR(std::abs(out.samples[0]), 0.0, 1e-15);
}

TEST(Mzm, SmallSignalLinearization) {
  // For |v| << v_pi, E_out ~= (pi E_in / (4 v_pi)) (v_I + j v_Q): first-order
  // Taylor expansion of the sine transfer, evaluated here as the oracle.
  const double vpi = 3.5;
  const double ein = 1.0;
  const double drive = 0.05 * vpi;
  ComplexWaveform field{{cplx{ein, 0.0}}, kFs};
  RealWaveform vi{{drive}, kFs};
  RealWaveform vq{{-drive}, kFs};
  const ComplexWaveform out = mzm_iq_modulate(field, vi, vq, {vpi, 0.0, 0.5});
  const cplx lin = std::numbers::pi * ein / (4.0 * vpi) * cplx{drive, -drive};
  EXPECT_NEAR(std::abs(out.samples[0] - lin), 0.0, 0.01 * std::abs(lin));
}

TEST(Mzm, OutputBoundedByInputTimesLoss) {
  Rng rng(5);
  const double vpi = 3.5;
  const double il_db = 5.0;
  const std::size_t n = 2000;
  ComplexWaveform field;
  field.sample_rate_hz = kFs;
  RealWaveform vi, vq;
  vi.sample_rate_hz = vq.sample_rate_hz = kFs;
  for (std::size_t k = 0; k < n; ++k) {
    field.samples.push_back(cplx{rng.gaussian(), rng.gaussian()});
    vi.samples.push_back(10.0 * (rng.uniform01() - 0.5) * vpi);
    vq.samples.push_back(10.0 * (rng.uniform01() - 0.5) * vpi);
  }
  const ComplexWaveform out = mzm_iq_modulate(field, vi, vq, {vpi, il_db, 0.5});
  const double il = std::pow(10.0, -il_db / 20.0);
  for (std::size_t k = 0; k < n; ++k) {
    EXPECT_LE(std::abs(out.samples[k]),
              std::abs(field.samples[k]) * il * (1.0 + 1e-12));
  }
}

TEST(Mzm, LengthMismatchThrows) {
  ComplexWaveform field{{cplx{1.0, 0.0}, cplx{1.0, 0.0}}, kFs};
  RealWaveform v1{{0.0}, kFs};
  EXPECT_THROW(mzm_iq_modulate(field, v1, v1, {}), LengthMismatchError);
}

TEST(Driver, DcGainAndToneAtCorner) {
  // A pure tone at the pole frequency comes out 3 dB down (|H| = 1/sqrt(2)).
  // Integer cycles per record keep the circular filtering exact.
  const std::size_t n = 10000;
  const double fs = 100e9;
  const double f3 = 10e9;  // 1000 cycles in the record
  RealWaveform tone, dc;
  tone.sample_rate_hz = dc.sample_rate_hz = fs;
  for (std::size_t k = 0; k < n; ++k) {
    tone.samples.push_back(
        std::cos(2.0 * std::numbers::pi * f3 * static_cast<double>(k) / fs));
    dc.samples.push_back(0.7);
  }
  const RealWaveform tone_out = driver_lowpass(tone, {f3, 1.0});
  const RealWaveform dc_out = driver_lowpass(dc, {f3, 2.0});
  double p_in = 0.0, p_out = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    p_in += tone.samples[k] * tone.samples[k];
    p_out += tone_out.samples[k] * tone_out.samples[k];
  }
  EXPECT_NEAR(std::sqrt(p_out / p_in), 1.0 / std::sqrt(2.0), 1e-6);
  for (double s : dc_out.samples) EXPECT_NEAR(s, 1.4, 1e-9);
}

TEST(Driver, InfiniteBandwidthBypasses) {
  RealWaveform w{{0.1, -0.9, 0.4}, kFs};
  const RealWaveform out =
      driver_lowpass(w, {std::numeric_limits<double>::infinity(), 1.0});
  for (std::size_t k = 0; k < w.samples.size(); ++k)
    EXPECT_DOUBLE_EQ(out.samples[k], w.samples[k]);
}

TEST(PolMux, PlacesSignalOnXCarrierOnY) {
  ComplexWaveform sig{{cplx{1.0, 0.0}}, kFs};
  ComplexWaveform car{{cplx{0.0, 2.0}}, kFs};
  const DualPolWaveform f = pol_mux(sig, car);
  EXPECT_EQ(f.x.samples[0], cplx(1.0, 0.0));
  EXPECT_EQ(f.y.samples[0], cplx(0.0, 2.0));
  ComplexWaveform bad{{cplx{1.0, 0.0}, cplx{0.0, 0.0}}, kFs};
  EXPECT_THROW(pol_mux(bad, car), LengthMismatchError);
}

TEST(SplitCarrier, PowerSplitsByRatio) {
  const ComplexWaveform laser = laser_field({10.0, 1550.0, 0.0}, 100, kFs, 1);
  ComplexWaveform mod, car;
  split_carrier(laser, 0.5, mod, car);
  EXPECT_NEAR(mean_power(mod), 5.0, 1e-9);
  EXPECT_NEAR(mean_power(car), 5.0, 1e-9);
  split_carrier(laser, 0.25, mod, car);
  EXPECT_NEAR(mean_power(mod), 2.5, 1e-9);
  EXPECT_NEAR(mean_power(car), 7.5, 1e-9);
  EXPECT_THROW(split_carrier(laser, 0.0, mod, car), ConfigError);
}

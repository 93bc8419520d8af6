#pragma once

#include <cmath>
#include <numbers>

#include "shqpsk/rng.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

/// 2x2 Jones matrix acting on (x, y) polarization components.
struct JonesMatrix {
  cplx xx{1.0, 0.0}, xy{0.0, 0.0};
  cplx yx{0.0, 0.0}, yy{1.0, 0.0};

  static JonesMatrix identity() { return JonesMatrix{}; }

  static JonesMatrix swap_ports() {
    return JonesMatrix{cplx{0, 0}, cplx{1, 0}, cplx{1, 0}, cplx{0, 0}};
  }

  /// Unitary from three angles: a rotation by theta with independent phases on
  /// the two rows. Spans every polarization transform needed to separate two
  /// orthogonal states (global phase is irrelevant).
  static JonesMatrix from_angles(double theta, double phi1, double phi2) {
    const double c = std::cos(theta), s = std::sin(theta);
    const cplx e1 = std::polar(1.0, phi1), e2 = std::polar(1.0, phi2);
    return JonesMatrix{c * e1, s * e2, -s * std::conj(e2), c * std::conj(e1)};
  }

  JonesMatrix compose(const JonesMatrix& rhs) const {  // this * rhs
    return JonesMatrix{xx * rhs.xx + xy * rhs.yx, xx * rhs.xy + xy * rhs.yy,
                       yx * rhs.xx + yy * rhs.yx, yx * rhs.xy + yy * rhs.yy};
  }

  JonesMatrix adjoint() const {
    return JonesMatrix{std::conj(xx), std::conj(yx), std::conj(xy), std::conj(yy)};
  }

  /// Max deviation of J*J^H from the identity.
  double unitarity_error() const {
    const JonesMatrix p = compose(adjoint());
    double e = std::abs(p.xx - cplx{1.0, 0.0});
    e = std::max(e, std::abs(p.yy - cplx{1.0, 0.0}));
    e = std::max(e, std::abs(p.xy));
    e = std::max(e, std::abs(p.yx));
    return e;
  }
};

/// Haar-uniform random SU(2) element via three angles:
/// theta = asin(sqrt(u)) with u ~ U[0,1), phases ~ U[0,2pi). The asin(sqrt(u))
/// density is what makes the distribution Haar (mean |J_xx|^2 = 1/2).
inline JonesMatrix random_sop_rotation(std::uint64_t seed) {
  Rng rng(seed);
  const double u = rng.uniform01();
  const double phi1 = 2.0 * std::numbers::pi * rng.uniform01();
  const double phi2 = 2.0 * std::numbers::pi * rng.uniform01();
  return JonesMatrix::from_angles(std::asin(std::sqrt(u)), phi1, phi2);
}

/// Apply J to every sample of a dual-polarization field.
inline DualPolWaveform pol_transform(const DualPolWaveform& f, const JonesMatrix& j) {
  require_dualpol(f, "pol_transform");
  DualPolWaveform out;
  out.x.sample_rate_hz = out.y.sample_rate_hz = f.sample_rate_hz();
  const std::size_t n = f.size();
  out.x.samples.resize(n);
  out.y.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const cplx ex = f.x.samples[k], ey = f.y.samples[k];
    out.x.samples[k] = j.xx * ex + j.xy * ey;
    out.y.samples[k] = j.yx * ex + j.yy * ey;
  }
  return out;
}

}  // namespace shqpsk

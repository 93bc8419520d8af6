#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "shqpsk/errors.hpp"
#include "shqpsk/prbs.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

/// One complex value per symbol interval.
using SymbolStream = std::vector<cplx>;

/// Per-quadrature amplitude of the unit-energy QPSK constellation, 1/sqrt(2).
inline constexpr double kQpskAmplitude = 0.7071067811865476;

/// Gray-mapped QPSK: bit pair (b_i, b_q) -> ((1-2*b_i) + j(1-2*b_q))/sqrt(2).
/// Unit symbol energy; adjacent constellation points differ in one bit.
inline SymbolStream qpsk_gray_map(const Bitstream& bits_i, const Bitstream& bits_q) {
  if (bits_i.size() != bits_q.size())
    throw LengthMismatchError("qpsk_gray_map: tributary lengths differ");
  SymbolStream out(bits_i.size());
  for (std::size_t k = 0; k < bits_i.size(); ++k)
    out[k] = cplx{(1.0 - 2.0 * bits_i[k]) * kQpskAmplitude,
                  (1.0 - 2.0 * bits_q[k]) * kQpskAmplitude};
  return out;
}

/// Hard decision by quadrant: bit_i = (Re < 0), bit_q = (Im < 0).
/// Samples exactly on a decision boundary (>= 0) decide bit 0, so the demap is
/// total and deterministic.
inline void qpsk_demap(const SymbolStream& symbols, Bitstream& bits_i, Bitstream& bits_q) {
  bits_i.resize(symbols.size());
  bits_q.resize(symbols.size());
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    bits_i[k] = symbols[k].real() < 0.0 ? 1 : 0;
    bits_q[k] = symbols[k].imag() < 0.0 ? 1 : 0;
  }
}

enum class PulseShape { nrz, raised_cosine };

namespace detail {

/// Raised-cosine impulse response in symbol units, p(0) = 1, p(k != 0) = 0.
inline double raised_cosine_pulse(double t, double rolloff) {
  const double a = rolloff;
  if (std::abs(t) < 1e-12) return 1.0;
  const double pit = std::numbers::pi * t;
  if (a > 0.0) {
    const double denom = 1.0 - 4.0 * a * a * t * t;
    if (std::abs(denom) < 1e-10) {
      // t = +-1/(2a): take the limit value (a/2) sin(pi/(2a)).
      return (a / 2.0) * std::sin(std::numbers::pi / (2.0 * a));
    }
    return (std::sin(pit) / pit) * std::cos(a * pit) / denom;
  }
  return std::sin(pit) / pit;
}

}  // namespace detail

/// Upsample a symbol sequence to samples_per_symbol points per symbol.
/// NRZ repeats each symbol value; raised_cosine superposes truncated pulses
/// (linear convolution, +-10 symbol span) with unit peak at the symbol-center
/// sample k*sps + sps/2. Output length = n_symbols * sps for both shapes.
inline ComplexWaveform build_waveform(const SymbolStream& symbols, int samples_per_symbol,
                                      double symbol_rate_hz,
                                      PulseShape shape = PulseShape::nrz,
                                      double rolloff = 0.5) {
  if (symbols.empty()) throw EmptyInputError("build_waveform: empty symbol stream");
  if (samples_per_symbol < 2)
    throw ConfigError("build_waveform: samples_per_symbol must be >= 2");
  const std::size_t sps = static_cast<std::size_t>(samples_per_symbol);
  ComplexWaveform w;
  w.sample_rate_hz = symbol_rate_hz * static_cast<double>(sps);
  w.samples.assign(symbols.size() * sps, cplx{0.0, 0.0});

  if (shape == PulseShape::nrz) {
    for (std::size_t k = 0; k < symbols.size(); ++k)
      for (std::size_t m = 0; m < sps; ++m) w.samples[k * sps + m] = symbols[k];
    return w;
  }

  constexpr int span_symbols = 10;
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(span_symbols) *
                              static_cast<std::ptrdiff_t>(sps);
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(w.samples.size());
  const std::ptrdiff_t center0 = static_cast<std::ptrdiff_t>(sps / 2);
  for (std::size_t k = 0; k < symbols.size(); ++k) {
    const std::ptrdiff_t center = center0 + static_cast<std::ptrdiff_t>(k * sps);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, center - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(n - 1, center + half);
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
      const double t = static_cast<double>(i - center) / static_cast<double>(sps);
      w.samples[static_cast<std::size_t>(i)] +=
          symbols[k] * detail::raised_cosine_pulse(t, rolloff);
    }
  }
  return w;
}

}  // namespace shqpsk

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "shqpsk/qpsk.hpp"
#include "shqpsk/waveform.hpp"

namespace shqpsk {

/// Pick one sample per symbol at the given intra-symbol offset.
inline SymbolStream symbol_sample(const ComplexWaveform& w, std::size_t sps,
                                  std::size_t offset) {
  if (sps < 1) throw ConfigError("symbol_sample: samples per symbol must be >= 1");
  if (offset >= sps)
    throw OffsetRangeError("symbol_sample: offset " + std::to_string(offset) +
                           " outside [0, " + std::to_string(sps) + ")");
  SymbolStream out;
  for (std::size_t k = offset; k < w.samples.size(); k += sps) out.push_back(w.samples[k]);
  return out;
}

/// Default offset: the middle of the symbol period (the NRZ eye center).
inline SymbolStream symbol_sample(const ComplexWaveform& w, std::size_t sps) {
  return symbol_sample(w, sps, sps / 2);
}

/// How a blind-equalized stream was mapped back onto the reference: symbol
/// delay, quadrant rotation removed (clockwise), and the continuous residual
/// phase removed before the quadrant search.
struct Alignment {
  std::size_t delay_symbols = 0;
  int rotation_deg = 0;  // one of 0, 90, 180, 270
  double fine_derotation_rad = 0.0;
};

struct BerReport {
  std::uint64_t bit_errors = 0;
  std::uint64_t bits_compared = 0;
  double ber = 0.0;
  /// Filled by the caller from the alignment step that produced the rx rails;
  /// identity when the streams were aligned by construction.
  Alignment alignment;
};

/// Hard bit-error count across both tributaries of pre-aligned rails.
/// With zero errors the report still carries bits_compared, so callers can
/// state "BER < 1/bits_compared" instead of a bare zero.
inline BerReport ber_measure(const Bitstream& rx_i, const Bitstream& rx_q,
                             const Bitstream& ref_i, const Bitstream& ref_q) {
  if (rx_i.size() != rx_q.size() || rx_i.size() != ref_i.size() ||
      rx_i.size() != ref_q.size())
    throw LengthMismatchError("ber_measure: all four rails must have equal length");
  if (rx_i.empty()) throw EmptyInputError("ber_measure: empty streams");
  BerReport res;
  for (std::size_t k = 0; k < rx_i.size(); ++k)
    res.bit_errors += (rx_i[k] != ref_i[k]) + (rx_q[k] != ref_q[k]);
  res.bits_compared = 2 * rx_i.size();
  res.ber = static_cast<double>(res.bit_errors) / static_cast<double>(res.bits_compared);
  return res;
}

struct AmbiguityResolution {
  /// rx with the fine derotation and quadrant rotation applied.
  SymbolStream corrected;
  Alignment alignment;
  /// Window BER of the winning hypothesis.
  double search_ber = 0.0;
};

/// Undo the two ambiguities blind modulus equalization leaves on QPSK — an
/// unknown carrier phase (continuous plus 90-degree quadrant) and an unknown
/// symbol delay against the transmitted reference.
///
/// The continuous part comes from the fourth power: QPSK symbols raised to
/// the 4th collapse to -1 regardless of data, so arg(-mean(rx^4))/4 is the
/// residual phase within a quadrant. The quadrant and delay are then an
/// exhaustive search over 4 rotations x delays in [0, max_delay], scored by
/// BER over a leading window; anything above fail_threshold everywhere means
/// the link never produced data worth aligning.
inline AmbiguityResolution resolve_ambiguity(const SymbolStream& rx, const Bitstream& ref_i,
                                             const Bitstream& ref_q,
                                             std::size_t max_delay = 64,
                                             std::size_t window = 4096,
                                             double fail_threshold = 0.45) {
  if (rx.empty()) throw EmptyInputError("resolve_ambiguity: empty symbol stream");
  if (ref_i.size() != ref_q.size())
    throw LengthMismatchError("resolve_ambiguity: reference rails differ in length");
  if (window < 1) throw ConfigError("resolve_ambiguity: window must be >= 1");
  if (ref_i.size() < window)
    throw ConfigError("resolve_ambiguity: reference shorter than the search window (" +
                      std::to_string(ref_i.size()) + " < " + std::to_string(window) + ")");

  AmbiguityResolution res;
  const std::size_t est_n = std::min(window, rx.size());
  cplx fourth{0.0, 0.0};
  for (std::size_t k = 0; k < est_n; ++k) {
    const cplx s2 = rx[k] * rx[k];
    fourth += s2 * s2;
  }
  res.alignment.fine_derotation_rad = 0.25 * std::arg(-fourth);
  const cplx derot = std::polar(1.0, -res.alignment.fine_derotation_rad);

  double best_ber = 1.0 + 1e-9;
  std::size_t best_delay = 0;
  int best_quadrant = 0;
  for (int quadrant = 0; quadrant < 4; ++quadrant) {
    const cplx rot = derot * std::polar(1.0, -0.5 * std::numbers::pi * quadrant);
    for (std::size_t d = 0; d + 1 <= ref_i.size() && d <= max_delay; ++d) {
      const std::size_t n = std::min({window, rx.size(), ref_i.size() - d});
      if (n == 0) continue;
      std::uint64_t errors = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const cplx s = rx[k] * rot;
        errors += ((s.real() < 0.0 ? 1 : 0) != ref_i[k + d]) +
                  ((s.imag() < 0.0 ? 1 : 0) != ref_q[k + d]);
      }
      const double ber = static_cast<double>(errors) / static_cast<double>(2 * n);
      if (ber < best_ber) {
        best_ber = ber;
        best_delay = d;
        best_quadrant = quadrant;
      }
    }
  }
  if (best_ber > fail_threshold)
    throw NoAlignmentError("resolve_ambiguity: no rotation/delay hypothesis beat BER " +
                           std::to_string(fail_threshold));
  res.alignment.delay_symbols = best_delay;
  res.alignment.rotation_deg = 90 * best_quadrant;
  res.search_ber = best_ber;
  const cplx correction = derot * std::polar(1.0, -0.5 * std::numbers::pi * best_quadrant);
  res.corrected.reserve(rx.size());
  for (const cplx& s : rx) res.corrected.push_back(s * correction);
  return res;
}

/// Root-mean-square distance to the NEAREST ideal constellation point,
/// divided by the RMS ideal symbol magnitude, in percent. Blind by design:
/// it needs no reference data, only ambiguity-resolved symbols, and a gain
/// error therefore counts as error vector.
inline double evm_measure(const SymbolStream& symbols) {
  if (symbols.empty()) throw EmptyInputError("evm_measure: empty stream");
  double err = 0.0, pwr = 0.0;
  for (const cplx& s : symbols) {
    const cplx ideal{s.real() < 0.0 ? -kQpskAmplitude : kQpskAmplitude,
                     s.imag() < 0.0 ? -kQpskAmplitude : kQpskAmplitude};
    err += std::norm(s - ideal);
    pwr += std::norm(ideal);
  }
  return 100.0 * std::sqrt(err / pwr);
}

/// Write symbols as CSV: a comment header carrying the scenario id and the
/// volts-per-unit scale, then index,re,im rows (%.17g — lossless for double).
/// At most max_points leading symbols are written. An empty dump is an error
/// and creates no file.
inline void export_constellation(const std::string& path, const std::string& scenario_id,
                                 double scale, const SymbolStream& symbols,
                                 std::size_t max_points = 20000) {
  if (symbols.empty())
    throw EmptyInputError("export_constellation: refusing to write an empty dump");
  std::ofstream out(path);
  if (!out) throw IoError("export_constellation: cannot open " + path);
  char line[128];
  std::snprintf(line, sizeof(line), "# scenario=%s scale=%.17g\n", scenario_id.c_str(), scale);
  out << line << "index,re,im\n";
  const std::size_t n = std::min(symbols.size(), max_points);
  for (std::size_t k = 0; k < n; ++k) {
    std::snprintf(line, sizeof(line), "%zu,%.17g,%.17g\n", k, symbols[k].real(),
                  symbols[k].imag());
    out << line;
  }
  if (!out) throw IoError("export_constellation: write failed for " + path);
}

}  // namespace shqpsk

#pragma once

#include <cstdint>
#include <vector>

#include "shqpsk/errors.hpp"

namespace shqpsk {

/// Unpacked bit sequence (one bit per element, values 0/1).
using Bitstream = std::vector<std::uint8_t>;

namespace detail {

/// Second feedback tap of the maximal-length polynomial x^n + x^m + 1 for the
/// supported register orders (ITU-T style PRBS generators).
inline int prbs_second_tap(int order) {
  switch (order) {
    case 7: return 6;
    case 9: return 5;
    case 15: return 14;
    case 23: return 18;
    case 31: return 28;
    default:
      throw UnsupportedOrderError("prbs_generate: unsupported order " + std::to_string(order));
  }
}

}  // namespace detail

/// Fibonacci-configuration PRBS generator, period 2^order - 1. The seed fills
/// the shift register (truncated to the register width) and must not reduce to
/// zero, the lone fixed point of the recurrence.
inline Bitstream prbs_generate(int order, std::size_t n_bits, std::uint64_t seed) {
  const int tap2 = detail::prbs_second_tap(order);
  const std::uint64_t mask = (order == 64) ? ~0ull : ((1ull << order) - 1ull);
  std::uint64_t state = seed & mask;
  if (state == 0)
    throw SeedZeroError("prbs_generate: seed reduces to zero in a " +
                        std::to_string(order) + "-bit register");
  Bitstream out(n_bits);
  for (std::size_t i = 0; i < n_bits; ++i) {
    const std::uint64_t fb =
        ((state >> (order - 1)) ^ (state >> (tap2 - 1))) & 1ull;
    out[i] = static_cast<std::uint8_t>((state >> (order - 1)) & 1ull);
    state = ((state << 1) | fb) & mask;
  }
  return out;
}

}  // namespace shqpsk

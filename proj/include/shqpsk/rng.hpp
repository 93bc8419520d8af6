#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace shqpsk {

/// splitmix64 step. Used both as the PRNG core and as the seed-splitting hash:
/// it is small, fast, passes standard bit-mixing tests, and its output is
/// platform-independent, which keeps every noise stream bit-reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Named sub-stream tags for the declared master-seed splitting rule.
enum class SeedStage : std::uint64_t {
  bits_i = 1,
  bits_q = 2,
  laser_phase = 3,
  edfa_ase = 4,
  rx_thermal = 5,
};

/// Declared splitting rule: sub_seed(master, stage) = splitmix64 of
/// (master XOR stage*0x9e3779b97f4a7c15). Sub-streams are independent of which
/// downstream stages are enabled, so toggling e.g. the equalizer cannot
/// perturb the channel noise realizations.
inline std::uint64_t derive_subseed(std::uint64_t master, SeedStage stage) {
  std::uint64_t s = master ^ (static_cast<std::uint64_t>(stage) * 0x9e3779b97f4a7c15ull);
  return splitmix64(s);
}

/// Deterministic PRNG with uniform and Gaussian draws (Box-Muller, cached
/// spare). Not std::normal_distribution: its algorithm is
/// implementation-defined and would tie output files to a libstdc++ version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal draw.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 shifted away from 0 so the log is finite.
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace shqpsk

#pragma once

#include <stdexcept>
#include <string>

namespace shqpsk {

/// Base class for all simulator errors.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// PRBS seed is zero (or reduces to zero in the register width).
struct SeedZeroError : SimError {
  using SimError::SimError;
};

/// PRBS order is not one of the supported maximal-length registers.
struct UnsupportedOrderError : SimError {
  using SimError::SimError;
};

/// Two inputs that must have equal length do not.
struct LengthMismatchError : SimError {
  using SimError::SimError;
};

/// An operation received an empty stream/segment where data is required.
struct EmptyInputError : SimError {
  using SimError::SimError;
};

/// A field with zero total power where power is required.
struct ZeroPowerError : SimError {
  using SimError::SimError;
};

/// Signal statistics degenerate (e.g. constant input to the AGC).
struct DegenerateSignalError : SimError {
  using SimError::SimError;
};

/// Equalizer tap spacing does not land on the sample grid.
struct TapSpacingError : SimError {
  using SimError::SimError;
};

/// Equalizer tap magnitude exceeded the divergence ceiling.
struct DivergenceError : SimError {
  using SimError::SimError;
};

/// Sampling offset outside [0, samples_per_symbol).
struct OffsetRangeError : SimError {
  using SimError::SimError;
};

/// No rotation/delay hypothesis beat the alignment threshold.
struct NoAlignmentError : SimError {
  using SimError::SimError;
};

/// Filesystem write/read failure.
struct IoError : SimError {
  using SimError::SimError;
};

/// Scenario configuration failed parsing or validation.
struct ConfigError : SimError {
  using SimError::SimError;
};

/// Amplification requested from a disabled amplifier.
struct AmplifierDisabledError : SimError {
  using SimError::SimError;
};

}  // namespace shqpsk

#pragma once

namespace shqpsk {

inline constexpr const char* kToolName = "shqpsk-sim";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kConfigSchemaVersion = 1;

}  // namespace shqpsk

#pragma once

namespace sparsetune {
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kConfigSchemaVersion = 1;
}  // namespace sparsetune

#pragma once

namespace remet {

inline constexpr const char* kToolName = "remet";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace remet

#pragma once

namespace nvpm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nvpm

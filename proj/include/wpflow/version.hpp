#pragma once

namespace wpflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wpflow

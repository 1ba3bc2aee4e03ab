#pragma once

namespace proxybounds {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace proxybounds

#pragma once

namespace qkb {

inline constexpr const char* kVersion = "0.1.0";

} // namespace qkb

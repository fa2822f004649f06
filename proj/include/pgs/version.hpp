#pragma once

namespace pgs {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pgs

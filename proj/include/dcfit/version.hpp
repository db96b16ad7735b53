#pragma once

namespace dcfit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dcfit

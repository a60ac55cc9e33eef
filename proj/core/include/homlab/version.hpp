#pragma once

namespace homlab {
inline constexpr const char* kVersion = "0.1.0";
}

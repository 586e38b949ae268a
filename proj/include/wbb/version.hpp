#pragma once

namespace wbb {
inline constexpr const char* kVersion = "0.1.0";
}

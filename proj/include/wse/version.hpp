#pragma once

namespace wse {
inline constexpr const char* kVersion = "0.1.0";
}

#pragma once

namespace prepsy {
inline constexpr const char* kVersion = "0.1.0";
}

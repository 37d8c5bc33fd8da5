#pragma once

namespace qknit {
inline constexpr const char* kVersion = "0.1.0";
}

#pragma once

namespace cavity {

inline constexpr const char* version = "0.1.0";

}  // namespace cavity

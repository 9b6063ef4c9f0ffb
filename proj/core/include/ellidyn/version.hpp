#pragma once

namespace ellidyn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ellidyn

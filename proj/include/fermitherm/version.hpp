// version.hpp — Library version string

#pragma once

namespace fermitherm {

inline constexpr const char* version = "1.0.0";

} // namespace fermitherm

#pragma once

namespace debris {

inline constexpr const char* k_tool_version = "0.1.0";

} // namespace debris

#pragma once

namespace peierls {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace peierls

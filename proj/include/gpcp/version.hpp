#pragma once

namespace gpcp {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace gpcp

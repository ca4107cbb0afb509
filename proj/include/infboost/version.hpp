#pragma once

namespace infboost {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace infboost

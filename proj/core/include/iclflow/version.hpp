#pragma once

namespace iclflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace iclflow

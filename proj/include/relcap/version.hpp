#pragma once

namespace relcap {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace relcap

#pragma once

namespace qcomp {

inline constexpr const char *kVersion = "0.1.0";

}  // namespace qcomp

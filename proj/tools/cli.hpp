#pragma once

#include <string>
#include <vector>

namespace xlgen::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitDivergence = 4;

// Entry point of the `xlgen` tool; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace xlgen::cli

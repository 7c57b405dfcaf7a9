#pragma once

#include <string>
#include <vector>

namespace forge::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeError = 3;
inline constexpr int kConfigError = 2;

/// Entry point of the `forge` binary, callable in-process by tests.
int main(int argc, const char* const* argv);
int main(const std::vector<std::string>& args);

}  // namespace forge::cli

#pragma once

#include <string>
#include <vector>

namespace cgaug {

// Output root override; takes precedence over the config file.
inline constexpr const char* kOutputRootEnv = "CGAUG_OUTPUT_ROOT";

// Entry point of the `cgaug` tool. Returns the process exit code.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace cgaug

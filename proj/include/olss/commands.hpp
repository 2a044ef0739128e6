#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace olss {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitArgument = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Entry point of the `olss` tool. `args` excludes the program name.
/// Subcommands: gen-data, sketch, bench, report.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace olss

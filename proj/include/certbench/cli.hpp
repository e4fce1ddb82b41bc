#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace certbench {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int fail = 1;       // certification verdict Fail, or no feasible bound
inline constexpr int usage = 2;      // bad flags, config or input files
inline constexpr int numerical = 3;  // non-convergence or an undetermined verdict
}  // namespace exit_code

/// Parses `args` (without the program name) and runs one subcommand.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace certbench

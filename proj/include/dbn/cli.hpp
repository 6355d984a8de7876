#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dbn {

/// Exit codes of the command-line front end.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
};

/// Runs one CLI invocation. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "%.12g" formatting used for every numeric output.
std::string format_number(double value);

}  // namespace dbn

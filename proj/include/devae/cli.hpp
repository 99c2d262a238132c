#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace devae {

// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitDivergence = 3,
};

// Runs one CLI invocation. `args` excludes the program name. Results go to
// `out` and files; diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace devae

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace psp::cli {

// Exit codes of the psp tool.
enum ExitCode : int {
    kSuccess = 0,
    kIoFailure = 1,
    kValidationFailure = 2,
    kNumericalDiagnostic = 3,
};

// Runs the command line `args` (without the program name). Normal output goes
// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace psp::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace descobs {

/// Exit codes of the command-line tool.
enum ExitCode : int {
    kExitOk = 0,
    kExitNegative = 1,  ///< not detectable / not partially detectable
    kExitError = 2,     ///< input, dimension or numerical failure
    kExitDisagree = 3,  ///< detectability methods disagree (--method all)
    kExitAsymptotic = 4 ///< observer is only an asymptotic estimator
};

/// Entry point behind the `descobs` binary. args[0] is the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace descobs

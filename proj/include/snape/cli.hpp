#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snape::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kDataError = 2,
    kNotConverged = 3,
    kNumerical = 4,
};

/// Runs one command line. args[0] is the program name. Results go to files
/// or `out`; diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace snape::cli

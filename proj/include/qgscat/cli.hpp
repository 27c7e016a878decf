#pragma once

// Command-line front end. Exit codes: 0 ok, 1 invalid input, 2 spectral
// singularity, 3 non-convergence, 4 verification failure.

#include "qgscat/linalg.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace qgscat {

enum ExitCode : int {
    kExitOk = 0,
    kExitInvalid = 1,
    kExitSingular = 2,
    kExitNonConvergence = 3,
    kExitVerification = 4,
};

enum class GridAxis { Real, Tau, Offset };

/// "start:stop:count[:log]" on the real or tau axis; "start:stop:count:im"
/// for a line above the real axis. Returns the spectral points z.
/// Throws InvalidArgument on malformed specs, count < 1 or a point at 0.
std::vector<Complex> parse_grid(std::string_view spec, GridAxis axis);

/// `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace qgscat

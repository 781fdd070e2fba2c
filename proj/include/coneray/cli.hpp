#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace coneray {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 1,
    exit_no_convergence = 2,
    exit_violated = 3,
};

/// Runs the command line `coneray <args...>` (args excludes the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Default sampling seed: CONE_RAY_SEED if set and valid, else 42.
unsigned long long default_seed();

} // namespace coneray

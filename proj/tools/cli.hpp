#pragma once

#include <ostream>

namespace msgd_lab::cli {

/// Exit codes: 0 ok, 1 usage, 2 divergence, 3 infeasible under --strict, 4 validation failure.
enum ExitCode : int { Ok = 0, Usage = 1, Divergence = 2, Infeasible = 3, ValidationFailed = 4 };

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace msgd_lab::cli

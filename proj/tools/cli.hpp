#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace artic::cli {

/// Runs `articc` with `args` (program name excluded). Returns the exit code:
/// 0 success, 2 gate failure, 3 input error or bad usage, 4 internal error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace artic::cli

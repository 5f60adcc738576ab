#pragma once

#include <string>
#include <vector>

namespace sips::cli {

/// Runs one subcommand. `args` excludes the program name. Exit codes:
/// 0 success, 1 failed checks, 2 malformed configuration, 3 numerical
/// divergence.
int run(const std::vector<std::string>& args);

}  // namespace sips::cli

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace qsurg::cli {

// Runs the command line tool on the given arguments (without argv[0]).
// Returns the process exit code: 0 when every requested check passed.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace qsurg::cli

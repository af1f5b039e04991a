#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gnarx::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_failure = 1,
    exit_config = 2,
    exit_data = 3,
    exit_numerical = 4,
};

/// Entry point of the command-line tool; `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace gnarx::cli

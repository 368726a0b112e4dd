#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace qtrail {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitData = 2,
    kExitInternal = 3,
};

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace qtrail

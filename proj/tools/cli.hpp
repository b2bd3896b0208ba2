#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace snerf::cli {

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kNumeric = 3 };

/// Runs the command line `args` (without the program name). Progress goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace snerf::cli

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace relcap::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3, kInternal = 4 };

/// Runs one command line (args[0] is the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace relcap::cli

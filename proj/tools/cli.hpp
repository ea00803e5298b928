#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sandkit::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kInvalidInput = 2,
  kDegenerate = 3,
};

// Runs one `sandkit <subcommand> ...` invocation. args excludes the program
// name. Reports go to `out` unless --out is given; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sandkit::cli

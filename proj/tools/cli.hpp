#pragma once

#include <ostream>

namespace svb::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kIo = 3,
  kParse = 4,
  kDomain = 5,
  kDivergence = 6,
  kInternal = 70,
};

/// Entry point shared by the `svb` binary and the CLI tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace svb::cli

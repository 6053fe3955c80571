#pragma once

#include <iosfwd>

/// Command-line front end. Subcommands: simulate, identify rev|gpm|kec,
/// degauss, selfcheck.
namespace reluctsim::cli {

enum ExitCode : int {
  kOk = 0,
  kSelfCheckFailed = 1,
  kInvalidInput = 2,
  kRuntimeFailure = 3,
  kOrdering = 4,
};

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reluctsim::cli

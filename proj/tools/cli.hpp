#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace infboost::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kUsage = 2,
  kData = 3,
  kNumeric = 4,
};

// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace infboost::cli

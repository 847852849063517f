#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace flatplan::cli {

/// Exit codes of run().
enum Exit : int {
  kOk = 0,
  kVerifyFailed = 1,  ///< verify found a collision, overlap or waypoint miss
  kInfeasible = 2,    ///< planner found no plan; certificates go to stderr
  kUnverified = 3,    ///< planner returned a plan the verifier rejects
  kBadInput = 4,
};

/// `flatplan plan|verify|plot|sweep ...`; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace flatplan::cli

#pragma once

#include <string>
#include <vector>

namespace eulerstab {

struct SuiteResult {
  std::string name;
  bool passed = true;
  /// Conjecture probes report without failing the run.
  bool fatal = true;
  std::string detail;
};

/// Names accepted by run_verification besides "all".
std::vector<std::string> verification_suites();

/// Runs one named suite, or every suite for "all". Throws
/// std::invalid_argument for an unknown name.
std::vector<SuiteResult> run_verification(const std::string& suite, unsigned seed = 12345);

}  // namespace eulerstab

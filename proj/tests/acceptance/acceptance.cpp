// Acceptance run: one PASS/FAIL line per criterion at full sample counts.
// Exit status is non-zero if any criterion fails.

#include <cstdlib>
#include <iostream>

#include "revamp/harness/verify.hpp"

int main() {
  using namespace revamp::harness;
  bool all = true;
  run_all_checks(20240601, VerifyScale::full(), [&](const CheckResult &r) {
    std::cout << format_check(r) << "  (" << r.seconds << " s)" << std::endl;
    all = all && r.passed;
  });
  std::cout << (all ? "ALL CRITERIA PASSED" : "SOME CRITERIA FAILED") << std::endl;
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}

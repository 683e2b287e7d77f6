#pragma once

// Self-contained verification suites behind the `verify` subcommand: each
// runs the invariants of one module at desk scale and reports a
// machine-readable pass/fail list.

#include <cstdint>
#include <string>
#include <vector>

namespace hmflow {

struct CheckResult {
    std::string suite;
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

// suite is one of: symfun | constants | geometry | flow-short.
// Throws std::domain_error for an unknown suite name.
std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed);

} // namespace hmflow

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sellf::oracle {

struct SuiteCheck {
  std::string name;
  int instances = 0;  // instances that exercised the check
  int failures = 0;
  double worst = 0.0;  // largest violation or error seen
  double seconds = 0.0;
  std::string detail;

  bool passed() const { return failures == 0 && instances > 0; }
};

// Runs every identity and sufficient-condition check over `instances`
// random tabular problems per check.
std::vector<SuiteCheck> RunTheoremSuite(int instances, std::uint64_t seed);

// Individual groups of checks, also used directly by the tests.
std::vector<SuiteCheck> DecompositionChecks(int instances, std::uint64_t seed);
std::vector<SuiteCheck> AcceptedOnlyChecks(int instances, std::uint64_t seed);
std::vector<SuiteCheck> SufficientConditionChecks(int instances,
                                                  std::uint64_t seed);
std::vector<SuiteCheck> ImportanceWeightChecks(int instances,
                                               std::uint64_t seed);
std::vector<SuiteCheck> MultiGroupChecks(int instances, std::uint64_t seed);

std::string FormatSuite(const std::vector<SuiteCheck>& checks);

}  // namespace sellf::oracle

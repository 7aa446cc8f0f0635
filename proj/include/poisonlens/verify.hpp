#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace poisonlens {

struct CheckResult {
  std::string name;
  double value = 0.0;      // worst observed error or violation count
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

// Randomised closed-form identity checks for the kernel poisoning laws,
// capacity monotonicity, the stepwise update and Lanczos, all keyed on seed.
std::vector<CheckResult> verify_all(std::uint64_t seed);

bool all_passed(const std::vector<CheckResult>& checks);

}  // namespace poisonlens

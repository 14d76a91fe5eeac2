#pragma once

#include <string>
#include <vector>

namespace driftlab::harness {

struct SelfCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the closed-form oracle examples of every module. Fast (well under a second).
std::vector<SelfCheck> run_selftest();

}  // namespace driftlab::harness

#pragma once

#include <string>
#include <vector>

namespace phasedrift {

struct SelftestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Fast invariant suite behind `phasedrift selftest`: closed-form
// coefficients, sphere and divergence identities, formal/generator
// consistency, free motion, the sphere eigen-decay and thread-count
// independence of a small ensemble. Runs in a few seconds.
std::vector<SelftestCheck> run_selftest();

}  // namespace phasedrift

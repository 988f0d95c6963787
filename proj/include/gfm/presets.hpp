#pragma once

#include "gfm/engine.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace gfm {

// Built-in reference scenarios.
//   s0  VSM, 1-phase fault under current limiting (loss of synchronism expected)
//   s1  power step 0.5 -> 1.0 and reversal to -1.0, strong grid
//   s2  islanded black start with 1 p.u. resistive load
//   s3  main grid disconnection while charging with local load
//   s4  fault ride-through, 1ph / 2ph / 2ph-g / 3ph
//   s5c, s5d  -80 deg phase jump + 2 Hz/s RoCoF, charging and discharging
Scenario preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace gfm

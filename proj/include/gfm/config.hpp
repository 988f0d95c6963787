#pragma once

#include "gfm/engine.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfm {

// Parse or validation failure. line is 1-based, 0 when the problem is not tied
// to a single line.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& message, int line, std::string key);

    [[nodiscard]] int line() const { return line_; }
    [[nodiscard]] const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

// YAML scenario document. Omitted keys keep their defaults, or the values of the
// preset named by the optional top-level "preset" key. Unknown keys, malformed
// values and out-of-range values raise ConfigError.
//
//   name: my_fault
//   preset: s4
//   mode: esc
//   duration: 9.0
//   control: {h: 2.0, k_d: 100, i_lim: 1.1}
//   plant: {grid: {scl: 40.0e6}}
//   initial: {p_ref: 0.5}
//   events: [{time: 2.0, type: setpoint, p_ref: 1.0}]
//   faults: [{kind: single_phase, start: 1.0, end: 2.0}]
//   loads: [{power: 0.8, bus: converter, connect: 1.5, disconnect: 6.0}]
Scenario parse_config(std::string_view text);

// Full document with every field spelled out; parse_config(serialize_config(s))
// reproduces s.
std::string serialize_config(const Scenario& scenario);

}  // namespace gfm

#include "gfm/presets.hpp"

#include <stdexcept>

namespace gfm {

namespace {

Scenario base(std::string name, double duration, double scl, double p_ref) {
    Scenario s;
    s.name = std::move(name);
    s.duration = duration;
    s.plant.grid.scl = scl;
    s.initial.p_ref = p_ref;
    return s;
}

Scenario s0() {
    Scenario s = base("s0", 6.0, 40.0e6, 0.5);
    s.control = ControllerParams::defaults(ControlMode::vsm);
    s.faults.push_back({FaultKind::single_phase, 1.0e-3, 2.0, 6.0, Bus::grid});
    s.expect_divergence = true;
    return s;
}

Scenario s1() {
    Scenario s = base("s1", 3.5, 400.0e6, 0.5);
    s.events.push_back({2.0, SetpointStep{1.0, std::nullopt}});
    s.events.push_back({2.5, SetpointStep{-1.0, std::nullopt}});
    return s;
}

Scenario s2() {
    Scenario s = base("s2", 2.0, 400.0e6, 0.0);
    s.plant.grid.connected = false;
    s.preroll = 0.0;
    s.initial.v_set = 0.0;
    s.events.push_back({0.0, VoltageRamp{1.0}});
    s.loads.push_back({1.0, Bus::grid, 1.0, 1.5});
    return s;
}

Scenario s3() {
    Scenario s = base("s3", 6.0, 400.0e6, -0.5);
    s.loads.push_back({0.8, Bus::converter, 1.5, 6.0});
    s.events.push_back({3.0, BreakerOperation{false}});
    return s;
}

Scenario s4() {
    Scenario s = base("s4", 9.0, 40.0e6, 0.5);
    s.faults.push_back({FaultKind::single_phase, 1.0e-3, 1.0, 2.0, Bus::grid});
    s.faults.push_back({FaultKind::two_phase, 1.0e-3, 3.0, 4.0, Bus::grid});
    s.faults.push_back({FaultKind::two_phase_ground, 1.0e-3, 5.0, 6.0, Bus::grid});
    s.faults.push_back({FaultKind::three_phase, 1.0e-3, 7.0, 8.0, Bus::grid});
    return s;
}

Scenario s5(std::string name, double p_ref) {
    Scenario s = base(std::move(name), 3.0, 4.0e6, p_ref);
    s.events.push_back({1.0, PhaseJump{-80.0}});
    s.events.push_back({1.0, FrequencyRamp{-2.0, 1.0}});
    return s;
}

}  // namespace

Scenario preset(std::string_view name) {
    if (name == "s0") return s0();
    if (name == "s1") return s1();
    if (name == "s2") return s2();
    if (name == "s3") return s3();
    if (name == "s4") return s4();
    if (name == "s5c") return s5("s5c", -0.9);
    if (name == "s5d") return s5("s5d", 0.9);
    throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

std::vector<std::string> preset_names() { return {"s0", "s1", "s2", "s3", "s4", "s5c", "s5d"}; }

}  // namespace gfm

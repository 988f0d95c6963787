#include "gfm/plant.hpp"
#include "properties.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace gfm;
using cplx = std::complex<double>;

namespace {

ThreePhase balanced(cplx phasor) {
    const double m = std::abs(phasor);
    const double a = std::arg(phasor);
    return {m * std::cos(a), m * std::cos(a - kTwoPi / 3.0), m * std::cos(a + kTwoPi / 3.0)};
}

double space_vector(const ThreePhase& x) {
    const AlphaBeta v = abc_to_alpha_beta(x);
    return std::hypot(v.alpha, v.beta);
}

ThreePhase sum(const ThreePhase& x, const ThreePhase& y) { return {x.a + y.a, x.b + y.b, x.c + y.c}; }

// Drives the plant with a fixed 50 Hz converter voltage for the given time.
PlantState drive(Plant& plant, cplx v_mod, const Topology& topo, double seconds) {
    const double dt = 20e-6;
    const double w = kTwoPi * 50.0;
    PlantState s;
    const GridParams& g = plant.params().grid;
    const int n = static_cast<int>(std::lround(seconds / dt));
    for (int k = 0; k < n; ++k) {
        const ThreePhase u = balanced(v_mod * std::polar(1.0, w * k * dt));
        s = plant.step(s, u, grid_voltage(k * dt, g), grid_voltage((k + 1) * dt, g), topo, dt);
    }
    return s;
}

}  // namespace

TEST_SUITE("plant") {

TEST_CASE("grid impedance from short-circuit level") {
    const auto z400 = scl_to_impedance(400e6, 2e6, 10.0);
    CHECK(std::hypot(z400.first, z400.second) == doctest::Approx(0.005));
    CHECK(z400.second / z400.first == doctest::Approx(10.0));
    const auto z4 = scl_to_impedance(4e6, 2e6, 10.0);
    CHECK(std::hypot(z4.first, z4.second) == doctest::Approx(0.5));
    const auto z_inf = scl_to_impedance(1e30, 2e6, 10.0);
    CHECK(std::hypot(z_inf.first, z_inf.second) < 1e-20);
}

TEST_CASE("zero drive stays at rest") {
    PlantParams p;
    p.grid.magnitude = 0.0;
    Plant plant(p);
    const PlantState s = drive(plant, 0.0, {}, 0.05);
    CHECK(space_vector(s.i_m) == 0.0);
    CHECK(space_vector(s.v_s) == 0.0);
    CHECK(space_vector(s.i_g) == 0.0);
}

TEST_CASE("islanded LCL with resistive load against the phasor solution") {
    PlantParams p;
    p.grid.connected = false;
    Plant plant(p);
    Topology topo;
    topo.grid_connected = false;
    topo.load_converter = 1.0;
    const PlantState s = drive(plant, 1.0, topo, 0.4);

    const cplx z_f(p.r_f, p.l_f);
    const cplx y_sh = 1.0 / (p.r_c + 1.0 / cplx(0.0, p.c_f)) + topo.load_converter;
    const cplx v_s = 1.0 / (1.0 + z_f * y_sh);
    CHECK(space_vector(s.v_s) == doctest::Approx(std::abs(v_s)).epsilon(1e-4));
    const double i_load = space_vector(s.v_s) * topo.load_converter;
    CHECK(i_load == doctest::Approx(std::abs(v_s)).epsilon(1e-4));
    CHECK(space_vector(s.i_m) == doctest::Approx(std::abs(v_s * y_sh)).epsilon(1e-4));
}

TEST_CASE("bolted three-phase fault against the phasor short-circuit solution") {
    PlantParams p;
    p.grid.scl = 40e6;
    Plant plant(p);
    Topology topo;
    const FaultSpec f{FaultKind::three_phase, 1e-3, 0.0, 1.0, Bus::grid};
    topo.faults = fault_branches(f);
    const PlantState s = drive(plant, 1.0, topo, 0.5);

    const auto [r_g, x_g] = scl_to_impedance(p.grid.scl, p.s_base, p.grid.x_r_ratio);
    const cplx z_f(p.r_f, p.l_f);
    const cplx y_c = 1.0 / (p.r_c + 1.0 / cplx(0.0, p.c_f));
    const cplx z_t(p.r_tr, p.x_tr);
    const cplx z_g(r_g, x_g);
    // Node equations for (v_s, v_g), source phasors u = e = 1.
    const cplx a11 = 1.0 / z_f + y_c + 1.0 / z_t;
    const cplx a12 = -1.0 / z_t;
    const cplx a22 = 1.0 / z_t + 1.0 / z_g + 1.0 / f.resistance;
    const cplx b1 = 1.0 / z_f;
    const cplx b2 = 1.0 / z_g;
    const cplx det = a11 * a22 - a12 * a12;
    const cplx v_s = (b1 * a22 - a12 * b2) / det;
    const cplx v_g = (a11 * b2 - a12 * b1) / det;
    const double i_fault = std::abs(v_g / f.resistance);

    CHECK(space_vector(s.v_s) == doctest::Approx(std::abs(v_s)).epsilon(1e-3));
    CHECK(space_vector(s.v_g) == doctest::Approx(std::abs(v_g)).epsilon(1e-3));
    CHECK(space_vector(sum(s.i_t, s.i_g)) == doctest::Approx(i_fault).epsilon(1e-3));
    CHECK(space_vector(s.i_m) == doctest::Approx(std::abs((1.0 - v_s) / z_f)).epsilon(1e-3));
}

TEST_CASE("energy accounting") {
    const test::PropertyResult r = test::plant_energy_balance();
    INFO(r.detail);
    CHECK(r.value < 1e-3);
}

TEST_CASE("damped steps on start and topology change") {
    Plant plant(PlantParams{});
    PlantState s;
    Topology topo;
    const ThreePhase e0 = grid_voltage(0.0, {});
    s = plant.step(s, e0, e0, e0, topo, 20e-6);
    CHECK(plant.last_step_damped());
    s = plant.step(s, e0, e0, e0, topo, 20e-6);
    CHECK_FALSE(plant.last_step_damped());
    topo.load_grid = 0.5;
    s = plant.step(s, e0, e0, e0, topo, 20e-6);
    CHECK(plant.last_step_damped());
    s = plant.step(s, e0, e0, e0, topo, 20e-6);
    CHECK_FALSE(plant.last_step_damped());
    plant.mark_discontinuity();
    plant.step(s, e0, e0, e0, topo, 20e-6);
    CHECK(plant.last_step_damped());
}

TEST_CASE("fault branches") {
    using K = FaultKind;
    const auto b1 = fault_branches({K::single_phase, 0.01, 0.0, 1.0, Bus::grid});
    REQUIRE(b1.size() == 1);
    CHECK(b1[0].from == 0);
    CHECK(b1[0].to == -1);
    CHECK(b1[0].resistance == 0.01);
    const auto b2 = fault_branches({K::two_phase, 0.01, 0.0, 1.0, Bus::grid});
    REQUIRE(b2.size() == 1);
    CHECK(b2[0].from == 1);
    CHECK(b2[0].to == 2);
    CHECK(fault_branches({K::two_phase_ground, 0.01, 0.0, 1.0, Bus::grid}).size() == 2);
    CHECK(fault_branches({K::three_phase, 0.01, 0.0, 1.0, Bus::converter}).size() == 3);
    CHECK(branch_voltage(b2[0], {1.0, 0.25, -0.5}) == 0.75);
    CHECK(branch_voltage(b1[0], {1.0, 0.25, -0.5}) == 1.0);
}

TEST_CASE("grid source") {
    GridParams g;
    GridSource src(g);
    const double dt = 20e-6;
    for (int k = 0; k < 1000; ++k) src.advance(dt);
    CHECK(src.angle() == doctest::Approx(kTwoPi * 50.0 * 1000 * dt));
    const double before = src.angle();
    src.jump_phase(-80.0 * kPi / 180.0);
    CHECK(src.angle() - before == doctest::Approx(-80.0 * kPi / 180.0));
    src.set_frequency_ramp(-2.0);
    for (int k = 0; k < 50000; ++k) src.advance(dt);
    CHECK(src.frequency() == doctest::Approx(48.0));
}

}

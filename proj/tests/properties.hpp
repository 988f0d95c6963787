#pragma once

#include "gfm/engine.hpp"

#include <complex>
#include <cstdint>
#include <string>

namespace gfm::test {

struct PropertyResult {
    double value{0.0};
    double limit{0.0};
    bool pass{false};
    std::string detail;
};

// Max |x - dq_to_abc(abc_to_dq(x))| over random zero-sequence-free triplets.
PropertyResult park_round_trip(std::uint64_t seed, int samples);

// DDSRF output after settling against the symmetrical components of the input
// phasor set, for a phase-a sag and random unbalanced sets.
PropertyResult ddsrf_vs_symmetrical_components(std::uint64_t seed, int cases);

// Virtual impedance against the closed-form 2x2 inverse for the tabulated cases.
PropertyResult virtual_impedance_examples();

// Joint limiter on random sequence pairs, checked by sweeping the frame angle
// and taking the largest phase value. Counts pairs over the limit or clipped
// more than needed.
PropertyResult limiter_phase_peak(std::uint64_t seed, int pairs);

// Droop power and the frequency at which a given power deficit is carried.
PropertyResult droop_arithmetic();

// Energy supplied by the converter and grid sources against the change in
// stored energy plus resistive losses, trapezoidal quadrature on the step data.
PropertyResult plant_energy_balance();

// Identical scenario run twice gives identical record hashes.
PropertyResult determinism(const Scenario& scenario);

struct DriftMetric {
    std::string scenario;
    std::string metric;
    double coarse{0.0};
    double fine{0.0};
};

// Settled scenario metrics at dt and dt / 2, largest relative drift.
PropertyResult dt_halving(double dt, std::vector<DriftMetric>* metrics = nullptr);

// Islanded steady state computed by successive substitution on the node
// voltage at fixed frequency, with bisection on the frequency for zero
// virtual power.
struct IslandedSolution {
    double omega{1.0};
    std::complex<double> v_converter;
    std::complex<double> v_grid;
};
IslandedSolution islanded_fixed_point(const Scenario& scenario, double v_set, double p_ref, double load_converter,
                                      double load_grid);

}  // namespace gfm::test

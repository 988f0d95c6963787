#pragma once

#include "gfm/frames.hpp"

#include <Eigen/Dense>

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace gfm {

// Thevenin grid behind the transformer. Source magnitude/phase/frequency are
// the initial conditions; events modify them during a run.
struct GridParams {
    double scl{400.0e6};  // short-circuit level [VA]
    double x_r_ratio{10.0};
    double magnitude{1.0};  // [p.u.]
    double phase{0.0};      // [rad]
    double frequency{50.0}; // [Hz]
    bool connected{true};

    void validate() const;
};

struct PlantParams {
    double s_base{2.0e6};
    double omega_base{kTwoPi * 50.0};
    double l_f{0.12};
    double r_f{0.01};
    double c_f{0.05};
    double r_c{0.3};  // series damping resistance of the filter capacitor [p.u.]
    double x_tr{0.065};
    double r_tr{0.005};
    GridParams grid;
    // Zero-sequence conductance added to a node that has no other path to ground.
    double floating_node_conductance{1.0e-6};

    void validate() const;
};

// Series R + X from short-circuit level, |z| = s_base / scl.
std::pair<double, double> scl_to_impedance(double scl, double s_base, double x_r_ratio);

enum class Bus { converter, grid };
enum class FaultKind { single_phase, two_phase, two_phase_ground, three_phase };

std::string_view to_string(FaultKind kind);
FaultKind fault_kind_from_string(std::string_view name);
std::string_view to_string(Bus bus);
Bus bus_from_string(std::string_view name);

// Applied at start; from end on, each branch opens at its first current zero.
struct FaultSpec {
    FaultKind kind{FaultKind::single_phase};
    double resistance{1.0e-3};  // [p.u.] per faulted branch
    double start{0.0};
    double end{0.0};
    Bus bus{Bus::grid};

    void validate() const;
    friend bool operator==(const FaultSpec&, const FaultSpec&) = default;
};

// One resistive branch of a fault: phase to ground (to < 0) or phase to phase.
struct FaultBranch {
    Bus bus{Bus::grid};
    int from{0};
    int to{-1};
    double resistance{1.0e-3};

    friend bool operator==(const FaultBranch&, const FaultBranch&) = default;
};

std::vector<FaultBranch> fault_branches(const FaultSpec& fault);

// Voltage across a branch; the branch current is this over the resistance.
double branch_voltage(const FaultBranch& branch, const ThreePhase& v);

struct LoadSpec {
    double power{1.0};  // resistive power at 1 p.u. voltage
    Bus bus{Bus::grid};
    double connect{0.0};
    double disconnect{0.0};

    void validate() const;
};

struct PlantState {
    ThreePhase i_m;  // converter inductor current, into the capacitor node
    ThreePhase v_s;  // capacitor voltage
    ThreePhase i_t;  // transformer current, capacitor node -> grid bus
    ThreePhase i_g;  // grid source current, into the grid bus
    ThreePhase v_g;  // grid bus voltage
    ThreePhase i_c;  // capacitor current
    ThreePhase v_c;  // voltage across the capacitance alone (v_s minus the damping drop)
};

// Shunt elements and breaker position in force during a step.
struct Topology {
    bool grid_connected{true};
    double load_converter{0.0};  // total resistive load conductance at the capacitor node
    double load_grid{0.0};
    std::vector<FaultBranch> faults;

    friend bool operator==(const Topology&, const Topology&) = default;
};

class NonFiniteState : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Averaged three-phase network: converter voltage -> L_f -> C_f node -> X_tr
// -> grid bus -> Thevenin source. Trapezoidal companion models, nodal solve for
// the six node voltages. Converter-side elements and the transformer carry no
// zero-sequence current.
//
// The first step, every topology change and every marked source discontinuity
// is integrated as two backward-Euler half steps (critical damping adjustment)
// so the trapezoidal rule does not chatter on the inconsistent history.
class Plant {
public:
    explicit Plant(PlantParams params);

    [[nodiscard]] const PlantParams& params() const { return params_; }
    [[nodiscard]] double grid_resistance() const { return r_g_; }
    [[nodiscard]] double grid_reactance() const { return x_g_; }

    // Advances one step. v_mod is held over the step, e_grid is the source at
    // the end of the step, e_grid_prev at its start.
    PlantState step(const PlantState& state, const ThreePhase& v_mod, const ThreePhase& e_grid_prev,
                    const ThreePhase& e_grid, const Topology& topology, double dt);

    // Forces damped integration on the next step (e.g. source phase jump).
    void mark_discontinuity() { discontinuity_ = true; }
    [[nodiscard]] bool last_step_damped() const { return last_damped_; }

private:
    using Mat3 = Eigen::Matrix3d;
    using Vec3 = Eigen::Vector3d;

    enum class Method { trapezoidal, backward_euler };

    struct Factorized {
        Topology topology;
        double h{0.0};
        Method method{Method::trapezoidal};
        Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu;
    };

    const Factorized& factorization(const Topology& topology, double h, Method method);
    PlantState integrate(const PlantState& state, const ThreePhase& v_mod, const ThreePhase& e_prev,
                         const ThreePhase& e_next, const Topology& topology, double h, Method method);
    [[nodiscard]] Mat3 fault_admittance(const Topology& topology, Bus bus) const;

    PlantParams params_;
    double r_g_{0.0};
    double x_g_{0.0};
    Mat3 projector_;  // removes the zero sequence
    std::optional<Factorized> trapezoidal_;
    std::optional<Factorized> damped_;
    std::optional<Topology> last_topology_;
    bool discontinuity_{true};
    bool last_damped_{false};
};

// Source voltage with accumulated phase, phase jumps and frequency ramps.
class GridSource {
public:
    explicit GridSource(const GridParams& params);

    // Advances the source angle to t + dt using the frequency at the start of the step.
    void advance(double dt);
    void jump_phase(double delta_rad) { angle_ += delta_rad; }
    void set_frequency_ramp(double rate_hz_per_s) { ramp_ = rate_hz_per_s; }
    void set_frequency(double hz) { frequency_ = hz; }
    void set_magnitude(double mag) { magnitude_ = mag; }

    [[nodiscard]] double angle() const { return angle_; }
    [[nodiscard]] double frequency() const { return frequency_; }
    [[nodiscard]] double magnitude() const { return magnitude_; }
    [[nodiscard]] ThreePhase voltage() const;

private:
    double angle_{0.0};
    double frequency_{50.0};
    double magnitude_{1.0};
    double ramp_{0.0};
};

// Source voltage at time t for constant frequency and phase offset.
ThreePhase grid_voltage(double t, const GridParams& params);

}  // namespace gfm

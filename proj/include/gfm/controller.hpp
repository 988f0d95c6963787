#pragma once

#include "gfm/frames.hpp"

#include <string_view>

namespace gfm {

enum class ControlMode { esc, vsm };

std::string_view to_string(ControlMode mode);
ControlMode control_mode_from_string(std::string_view name);

// Swing-equation synchronization, shared by both modes.
struct SyncParams {
    double h{2.0};           // inertia constant [s]
    double k_d{100.0};       // damping factor
    double tau_lpf{1.0e-3};  // washout time constant [s]
    double k_droop{20.0};    // [p.u./p.u.]
    double omega_ref{1.0};   // [p.u.]
    double omega_base{kTwoPi * 50.0};

    void validate() const;
};

struct SyncState {
    double omega{1.0};    // [p.u.]
    double theta{0.0};    // [rad], not wrapped
    double washout{0.0};  // low-pass of (omega - omega_ref)

    [[nodiscard]] double frequency_hz(double omega_base) const { return omega * omega_base / kTwoPi; }
};

double droop_power(double omega, const SyncParams& params);

// d(omega)/dt for a given power imbalance (reference minus feedback).
double swing_rate(const SyncState& state, double power_imbalance, const SyncParams& params);

// Emulated synchronous condenser: the power reference is zero and the feedback is
// the internal virtual power.
SyncState sync_step_esc(SyncState state, double p_esc, const SyncParams& params, double dt);

// Classical VSM: reference p_ref + droop, feedback is the measured output power.
SyncState sync_step_vsm(SyncState state, double p_ac, double p_ref, const SyncParams& params, double dt);

// Voltage controller with reactive power droop.
struct AvrParams {
    double k_q{0.1};
    double tau_v{5.0e-3};
    double tau_q{5.0e-3};
    double setpoint_rate{4.0};  // max |dV_set/dt| [p.u./s]
    double v_min{0.0};
    double v_max{1.5};

    void validate() const;
};

struct AvrState {
    double v_filtered{0.0};  // measured magnitude through tau_v, diagnostic only
    double q_filtered{0.0};
    double v_set{1.0};        // rate-limited setpoint
    double v_set_target{1.0};
    double v_star{1.0};
};

double avr_step(AvrState& state, const AvrParams& params, double v_mag, double q_ac, double q_ref, double dt);

struct VirtualImpedanceParams {
    double r_vp{0.05};
    double x_vp{0.2};
    double r_vn{0.05};
    double x_vn{0.2};

    void validate() const;
};

// Quasi-stationary virtual impedance in both sequences. The positive sequence is
// driven by (V* - v_dp, -v_qp), the negative by (-v_dn, -v_qn); the reactance
// enters with opposite sign in the negative frame.
SequenceFrames virtual_impedance(const SequenceFrames& v_s, double v_star, const VirtualImpedanceParams& params);

struct CurrentSourceRef {
    SequenceFrames current;
    bool floor_active{false};
};

// Positive-sequence current that delivers p_total at the given voltage estimate.
CurrentSourceRef current_source_ref(const SequenceFrames& v_s, double p_total, double v_floor = 0.01);

struct LimiterParams {
    double i_lim{1.1};

    void validate() const;
};

struct LimitedCurrent {
    SequenceFrames current;
    double scale{1.0};

    [[nodiscard]] bool active() const { return scale < 1.0; }
};

// Joint saturation of both sequences with a common factor so the worst-phase
// instantaneous peak |i+| + |i-| stays within i_lim.
LimitedCurrent limit_current(const SequenceFrames& i_ref, const LimiterParams& params);

// Worst instantaneous phase peak of a sequence pair, max over angle and phase.
double worst_phase_peak(const SequenceFrames& i);

struct CurrentControllerGains {
    double kp{0.0};
    double ki{0.0};
    double kr{0.0};
    double l_f{0.12};   // inductance used for dq decoupling [p.u.]
    double v_max{2.0};  // modulation voltage magnitude limit [p.u.]

    // Closed-loop pole at bandwidth_hz on the converter inductance, PI zero a
    // decade below, resonant gain twice the integral gain.
    static CurrentControllerGains from_bandwidth(double l_f, double bandwidth_hz, double omega_base);
};

struct CurrentControllerState {
    double int_d{0.0};
    double int_q{0.0};
    // Two-state oscillators at 2 omega_s, one per axis.
    double res_d{0.0};
    double res_d_aux{0.0};
    double res_q{0.0};
    double res_q_aux{0.0};
    bool saturated{false};
};

// PI + 2-omega resonant regulator in the positive-sequence dq frame with cross
// coupling compensation and voltage feed-forward. Returns the modulation voltage
// in the frame of i_meas.
DqFrame current_control_step(CurrentControllerState& state, const CurrentControllerGains& gains,
                             const DqFrame& i_ref, const DqFrame& i_meas, const DqFrame& v_ff,
                             double omega_s, double omega_base, double dt);

struct PowerMeasurements {
    double p_ac{0.0};
    double q_ac{0.0};
    double p_esc{0.0};
    double p_cs{0.0};
    double p_droop{0.0};
};

struct ControllerParams {
    ControlMode mode{ControlMode::esc};
    SyncParams sync;
    AvrParams avr;
    VirtualImpedanceParams impedance;
    LimiterParams limiter;
    CurrentControllerGains current;
    double ddsrf_cutoff{kTwoPi * 50.0 / std::numbers::sqrt2};
    double v_floor{0.01};

    // Table I values with derived current-controller gains.
    static ControllerParams defaults(ControlMode mode = ControlMode::esc);
    void validate() const;
};

struct ControllerState {
    SyncState sync;
    AvrState avr;
    DdsrfState ddsrf;
    CurrentControllerState current;
};

ControllerState make_controller_state(const ControllerParams& params, double theta0, double v_set0);

struct Setpoints {
    double p_ref{0.0};
    double q_ref{0.0};
    double v_set{1.0};
};

struct ControllerOutput {
    ThreePhase v_mod;
    PowerMeasurements power;
    SequenceFrames v_seq;
    SequenceFrames i_virtual;
    SequenceFrames i_limited;
    double limiter_scale{1.0};
    bool voltage_floor_active{false};
    double v_star{0.0};
    double theta{0.0};  // frame angle used for this step
    double omega{1.0};  // synchronization speed at the start of the step [p.u.]
};

// One full pass of the control chain: sequence separation, AVR, virtual
// impedance, current source (ESC only), limiter, combined Park, current control.
// AVR, virtual impedance and P_ESC use the decoupled sequence estimate; the
// current source uses the low-pass filtered one.
// Advances the synchronization state for the next step.
ControllerOutput controller_step(ControllerState& state, const ControllerParams& params, const Setpoints& sp,
                                 const ThreePhase& v_s, const ThreePhase& i_m, double dt);

}  // namespace gfm

#include "gfm/controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gfm {

std::string_view to_string(ControlMode mode) { return mode == ControlMode::esc ? "esc" : "vsm"; }

ControlMode control_mode_from_string(std::string_view name) {
    if (name == "esc") return ControlMode::esc;
    if (name == "vsm") return ControlMode::vsm;
    throw std::invalid_argument("unknown control mode '" + std::string(name) + "' (expected esc or vsm)");
}

void SyncParams::validate() const {
    if (!(h > 0.0)) throw std::invalid_argument("h must be > 0");
    if (!(k_d >= 0.0)) throw std::invalid_argument("k_d must be >= 0");
    if (!(tau_lpf > 0.0)) throw std::invalid_argument("tau_lpf must be > 0");
    if (!(k_droop > 0.0)) throw std::invalid_argument("k_droop must be > 0");
    if (!(omega_ref > 0.0) || !(omega_base > 0.0)) throw std::invalid_argument("omega_ref and omega_base must be > 0");
}

double droop_power(double omega, const SyncParams& params) { return params.k_droop * (params.omega_ref - omega); }

double swing_rate(const SyncState& state, double power_imbalance, const SyncParams& params) {
    // Washout: damping only sees the fast part of the speed deviation.
    const double damping = params.k_d * ((state.omega - params.omega_ref) - state.washout);
    return (power_imbalance - damping) / (2.0 * params.h);
}

namespace {

SyncState integrate_swing(SyncState state, double power_imbalance, const SyncParams& params, double dt) {
    state.omega += dt * swing_rate(state, power_imbalance, params);
    const double k = -std::expm1(-dt / params.tau_lpf);
    state.washout += k * ((state.omega - params.omega_ref) - state.washout);
    state.theta += state.omega * params.omega_base * dt;
    return state;
}

double first_order(double y, double u, double tau, double dt) { return y + (-std::expm1(-dt / tau)) * (u - y); }

}  // namespace

SyncState sync_step_esc(SyncState state, double p_esc, const SyncParams& params, double dt) {
    return integrate_swing(state, 0.0 - p_esc, params, dt);
}

SyncState sync_step_vsm(SyncState state, double p_ac, double p_ref, const SyncParams& params, double dt) {
    const double p_vsm_ref = p_ref + droop_power(state.omega, params);
    return integrate_swing(state, p_vsm_ref - p_ac, params, dt);
}

void AvrParams::validate() const {
    if (!(k_q >= 0.0)) throw std::invalid_argument("k_q must be >= 0");
    if (!(tau_v > 0.0) || !(tau_q > 0.0)) throw std::invalid_argument("tau_v and tau_q must be > 0");
    if (!(setpoint_rate > 0.0)) throw std::invalid_argument("setpoint_rate must be > 0");
    if (!(v_min >= 0.0) || !(v_max > v_min)) throw std::invalid_argument("AVR output bounds invalid");
}

double avr_step(AvrState& state, const AvrParams& params, double v_mag, double q_ac, double q_ref, double dt) {
    const double max_delta = params.setpoint_rate * dt;
    state.v_set += std::clamp(state.v_set_target - state.v_set, -max_delta, max_delta);
    state.v_filtered = first_order(state.v_filtered, v_mag, params.tau_v, dt);
    state.q_filtered = first_order(state.q_filtered, q_ac, params.tau_q, dt);
    const double raw = state.v_set + params.k_q * (q_ref - state.q_filtered);
    state.v_star = std::clamp(first_order(state.v_star, raw, params.tau_v, dt), params.v_min, params.v_max);
    return state.v_star;
}

void VirtualImpedanceParams::validate() const {
    if (!(r_vp * r_vp + x_vp * x_vp > 0.0)) throw std::invalid_argument("positive-sequence virtual impedance is zero");
    if (!(r_vn * r_vn + x_vn * x_vn > 0.0)) throw std::invalid_argument("negative-sequence virtual impedance is zero");
}

SequenceFrames virtual_impedance(const SequenceFrames& v_s, double v_star, const VirtualImpedanceParams& params) {
    const double zp2 = params.r_vp * params.r_vp + params.x_vp * params.x_vp;
    const double zn2 = params.r_vn * params.r_vn + params.x_vn * params.x_vn;
    if (!(zp2 > 0.0) || !(zn2 > 0.0)) throw std::invalid_argument("virtual impedance magnitude is zero");

    const double ep_d = v_star - v_s.dp;
    const double ep_q = -v_s.qp;
    const double en_d = -v_s.dn;
    const double en_q = -v_s.qn;

    SequenceFrames i;
    i.dp = (params.r_vp * ep_d + params.x_vp * ep_q) / zp2;
    i.qp = (-params.x_vp * ep_d + params.r_vp * ep_q) / zp2;
    i.dn = (params.r_vn * en_d - params.x_vn * en_q) / zn2;
    i.qn = (params.x_vn * en_d + params.r_vn * en_q) / zn2;
    return i;
}

CurrentSourceRef current_source_ref(const SequenceFrames& v_s, double p_total, double v_floor) {
    const double mag2 = v_s.dp * v_s.dp + v_s.qp * v_s.qp;
    const double floor2 = v_floor * v_floor;
    CurrentSourceRef out;
    out.floor_active = mag2 < floor2;
    const double denom = std::max(mag2, floor2);
    out.current.dp = p_total * v_s.dp / denom;
    out.current.qp = p_total * v_s.qp / denom;
    return out;
}

void LimiterParams::validate() const {
    if (!(i_lim > 0.0)) throw std::invalid_argument("i_lim must be > 0");
}

LimitedCurrent limit_current(const SequenceFrames& i_ref, const LimiterParams& params) {
    const double sum = i_ref.positive_magnitude() + i_ref.negative_magnitude();
    LimitedCurrent out{i_ref, 1.0};
    if (sum > params.i_lim) {
        out.scale = params.i_lim / sum;
        out.current = out.scale * i_ref;
    }
    return out;
}

double worst_phase_peak(const SequenceFrames& i) {
    // Phase k carries Re((I+ e^{j phi_k} + conj(I-) e^{-j phi_k}) e^{j theta}).
    double worst = 0.0;
    for (const double phi : {0.0, -kTwoPi / 3.0, kTwoPi / 3.0}) {
        const AlphaBeta p = rotate({i.dp, i.qp}, phi);
        const AlphaBeta n = rotate({i.dn, -i.qn}, -phi);
        worst = std::max(worst, std::hypot(p.alpha + n.alpha, p.beta + n.beta));
    }
    return worst;
}

CurrentControllerGains CurrentControllerGains::from_bandwidth(double l_f, double bandwidth_hz, double omega_base) {
    const double wc = kTwoPi * bandwidth_hz;
    CurrentControllerGains g;
    g.l_f = l_f;
    g.kp = wc * l_f / omega_base;
    g.ki = g.kp * wc / 10.0;
    g.kr = 2.0 * g.ki;
    return g;
}

DqFrame current_control_step(CurrentControllerState& state, const CurrentControllerGains& gains,
                             const DqFrame& i_ref, const DqFrame& i_meas, const DqFrame& v_ff,
                             double omega_s, double omega_base, double dt) {
    const double e_d = i_ref.d - i_meas.d;
    const double e_q = i_ref.q - i_meas.q;
    const double x_f = omega_s * gains.l_f;

    const double u_d = gains.kp * e_d + state.int_d + state.res_d;
    const double u_q = gains.kp * e_q + state.int_q + state.res_q;
    double v_d = v_ff.d - x_f * i_meas.q + u_d;
    double v_q = v_ff.q + x_f * i_meas.d + u_q;

    const double mag = std::hypot(v_d, v_q);
    state.saturated = mag > gains.v_max;
    if (state.saturated) {
        v_d *= gains.v_max / mag;
        v_q *= gains.v_max / mag;
    }

    // Conditional integration: hold an axis while saturated if its error pushes
    // the output further out.
    if (!state.saturated || e_d * v_d < 0.0) state.int_d += gains.ki * e_d * dt;
    if (!state.saturated || e_q * v_q < 0.0) state.int_q += gains.ki * e_q * dt;

    const double w_r = 2.0 * omega_s * omega_base;
    state.res_d += dt * (gains.kr * e_d - w_r * state.res_d_aux);
    state.res_d_aux += dt * w_r * state.res_d;
    state.res_q += dt * (gains.kr * e_q - w_r * state.res_q_aux);
    state.res_q_aux += dt * w_r * state.res_q;

    return {v_d, v_q, i_meas.theta};
}

ControllerParams ControllerParams::defaults(ControlMode mode) {
    ControllerParams p;
    p.mode = mode;
    p.current = CurrentControllerGains::from_bandwidth(0.12, 1000.0, p.sync.omega_base);
    p.ddsrf_cutoff = p.sync.omega_base / std::numbers::sqrt2;
    return p;
}

void ControllerParams::validate() const {
    sync.validate();
    avr.validate();
    impedance.validate();
    limiter.validate();
    if (!(current.kp > 0.0) || !(current.ki >= 0.0) || !(current.kr >= 0.0) || !(current.v_max > 0.0)) {
        throw std::invalid_argument("current controller gains invalid");
    }
    if (!(ddsrf_cutoff > 0.0)) throw std::invalid_argument("ddsrf_cutoff must be > 0");
    if (!(v_floor > 0.0)) throw std::invalid_argument("v_floor must be > 0");
}

ControllerState make_controller_state(const ControllerParams& params, double theta0, double v_set0) {
    ControllerState s;
    s.sync.omega = params.sync.omega_ref;
    s.sync.theta = theta0;
    s.avr.v_set = v_set0;
    s.avr.v_set_target = v_set0;
    s.avr.v_star = v_set0;
    s.ddsrf.cutoff = params.ddsrf_cutoff;
    return s;
}

ControllerOutput controller_step(ControllerState& state, const ControllerParams& params, const Setpoints& sp,
                                 const ThreePhase& v_s, const ThreePhase& i_m, double dt) {
    ControllerOutput out;
    const double theta = state.sync.theta;
    out.theta = theta;
    out.omega = state.sync.omega;

    out.v_seq = ddsrf_step(state.ddsrf, v_s, theta, dt);

    const AlphaBeta v_ab = abc_to_alpha_beta(v_s);
    const AlphaBeta i_ab = abc_to_alpha_beta(i_m);
    out.power.p_ac = v_ab.alpha * i_ab.alpha + v_ab.beta * i_ab.beta;
    out.power.q_ac = v_ab.beta * i_ab.alpha - v_ab.alpha * i_ab.beta;

    state.avr.v_set_target = sp.v_set;
    out.v_star = avr_step(state.avr, params.avr, out.v_seq.positive_magnitude(), out.power.q_ac, sp.q_ref, dt);

    out.i_virtual = virtual_impedance(out.v_seq, out.v_star, params.impedance);
    out.power.p_esc = out.v_seq.dot(out.i_virtual);
    out.power.p_droop = droop_power(state.sync.omega, params.sync);

    SequenceFrames i_ref = out.i_virtual;
    if (params.mode == ControlMode::esc) {
        // The current source divides by the filtered estimate so a sudden voltage dip
        // does not blow up the reference within a cycle.
        const SequenceFrames v_filtered{state.ddsrf.dp, state.ddsrf.qp, state.ddsrf.dn, state.ddsrf.qn};
        const CurrentSourceRef cs = current_source_ref(v_filtered, sp.p_ref + out.power.p_droop, params.v_floor);
        out.voltage_floor_active = cs.floor_active;
        out.power.p_cs = out.v_seq.dot(cs.current);
        i_ref += cs.current;
    }

    const LimitedCurrent limited = limit_current(i_ref, params.limiter);
    out.i_limited = limited.current;
    out.limiter_scale = limited.scale;

    const DqFrame i_ref_dq = combined_park(limited.current, theta);
    const DqFrame i_meas = abc_to_dq(i_m, theta);
    const DqFrame v_ff = abc_to_dq(v_s, theta);
    const DqFrame v_mod = current_control_step(state.current, params.current, i_ref_dq, i_meas, v_ff,
                                               state.sync.omega, params.sync.omega_base, dt);
    out.v_mod = dq_to_abc(v_mod);

    if (params.mode == ControlMode::esc) {
        state.sync = sync_step_esc(state.sync, out.power.p_esc, params.sync, dt);
    } else {
        state.sync = sync_step_vsm(state.sync, out.power.p_ac, sp.p_ref, params.sync, dt);
    }
    return out;
}

}  // namespace gfm

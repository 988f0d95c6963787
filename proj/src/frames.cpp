#include "gfm/frames.hpp"

#include <cmath>
#include <string>

namespace gfm {

namespace {
constexpr double kSqrt3 = std::numbers::sqrt3;
}

double SequenceFrames::positive_magnitude() const { return std::hypot(dp, qp); }
double SequenceFrames::negative_magnitude() const { return std::hypot(dn, qn); }

AlphaBeta abc_to_alpha_beta(const ThreePhase& x) {
    return {(2.0 * x.a - x.b - x.c) / 3.0, (x.b - x.c) / kSqrt3};
}

ThreePhase alpha_beta_to_abc(const AlphaBeta& x) {
    const double half_alpha = 0.5 * x.alpha;
    const double beta_term = 0.5 * kSqrt3 * x.beta;
    return {x.alpha, -half_alpha + beta_term, -half_alpha - beta_term};
}

AlphaBeta rotate(const AlphaBeta& x, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * x.alpha - s * x.beta, s * x.alpha + c * x.beta};
}

DqFrame abc_to_dq(const ThreePhase& x, double theta) {
    const AlphaBeta r = rotate(abc_to_alpha_beta(x), -theta);
    return {r.alpha, r.beta, theta};
}

ThreePhase dq_to_abc(const DqFrame& x) {
    return alpha_beta_to_abc(rotate({x.d, x.q}, x.theta));
}

ThreePhase sequences_to_abc(const SequenceFrames& s, double theta) {
    const AlphaBeta p = rotate({s.dp, s.qp}, theta);
    const AlphaBeta n = rotate({s.dn, s.qn}, -theta);
    return alpha_beta_to_abc({p.alpha + n.alpha, p.beta + n.beta});
}

DqFrame combined_park(const SequenceFrames& i, double theta) {
    const AlphaBeta n = rotate({i.dn, i.qn}, -2.0 * theta);
    return {i.dp + n.alpha, i.qp + n.beta, theta};
}

SequenceFrames ddsrf_step(DdsrfState& state, const ThreePhase& x, double theta, double dt) {
    const AlphaBeta ab = abc_to_alpha_beta(x);
    const AlphaBeta raw_p = rotate(ab, -theta);
    const AlphaBeta raw_n = rotate(ab, theta);

    // Cancel the 2-theta ripple each sequence induces in the other frame.
    const AlphaBeta cross_n = rotate({state.dn, state.qn}, -2.0 * theta);
    const AlphaBeta cross_p = rotate({state.dp, state.qp}, 2.0 * theta);
    const double dec_dp = raw_p.alpha - cross_n.alpha;
    const double dec_qp = raw_p.beta - cross_n.beta;
    const double dec_dn = raw_n.alpha - cross_p.alpha;
    const double dec_qn = raw_n.beta - cross_p.beta;

    const double k = -std::expm1(-state.cutoff * dt);
    state.dp += k * (dec_dp - state.dp);
    state.qp += k * (dec_qp - state.qp);
    state.dn += k * (dec_dn - state.dn);
    state.qn += k * (dec_qn - state.qn);
    // The decoupled signals are the sequence estimates; the filtered states only
    // feed the cross-decoupling.
    return {dec_dp, dec_qp, dec_dn, dec_qn};
}

Side side_from_string(std::string_view name) {
    if (name == "grid") return Side::grid;
    if (name == "lv") return Side::lv;
    throw std::invalid_argument("unknown per-unit side '" + std::string(name) + "'");
}

PerUnitBase PerUnitBase::from_ratings(double s_rated, double v_ll_grid, double v_ll_lv, double f_nominal) {
    if (!(s_rated > 0.0) || !(v_ll_grid > 0.0) || !(v_ll_lv > 0.0) || !(f_nominal > 0.0)) {
        throw std::invalid_argument("per-unit ratings must be strictly positive");
    }
    const double to_peak_phase = std::sqrt(2.0 / 3.0);
    PerUnitBase b;
    b.s_base = s_rated;
    b.v_base_grid = to_peak_phase * v_ll_grid;
    b.v_base_lv = to_peak_phase * v_ll_lv;
    b.omega_base = kTwoPi * f_nominal;
    b.i_base_grid = (2.0 / 3.0) * s_rated / b.v_base_grid;
    b.i_base_lv = (2.0 / 3.0) * s_rated / b.v_base_lv;
    return b;
}

PerUnitBase PerUnitBase::reference() { return from_ratings(2.0e6, 20.0e3, 400.0, 50.0); }

double PerUnitBase::base_of(Quantity kind, Side side) const {
    switch (kind) {
        case Quantity::voltage: return voltage(side);
        case Quantity::current: return current(side);
        case Quantity::power: return s_base;
        case Quantity::impedance: return impedance(side);
    }
    throw std::invalid_argument("unknown quantity");
}

double to_per_unit(double value, const PerUnitBase& base, Side side, Quantity kind) {
    return value / base.base_of(kind, side);
}

double from_per_unit(double value, const PerUnitBase& base, Side side, Quantity kind) {
    return value * base.base_of(kind, side);
}

}  // namespace gfm

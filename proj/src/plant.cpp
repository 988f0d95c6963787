#include "gfm/plant.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace gfm {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Vec3 vec(const ThreePhase& x) { return {x.a, x.b, x.c}; }
ThreePhase phases(const Vec3& v) { return {v(0), v(1), v(2)}; }

bool finite(const Vec3& v) { return v.allFinite(); }

// i1 = a i0 + b u0 + g u1 for a series R-L branch driven by u over one step h.
struct RlCompanion {
    double g;
    double a;
    double b;
};

RlCompanion rl_companion(double x_pu, double r_pu, double omega_base, double h, bool trapezoidal) {
    const double l = x_pu / omega_base;
    if (trapezoidal) {
        const double den = 2.0 * l + r_pu * h;
        return {h / den, (2.0 * l - r_pu * h) / den, h / den};
    }
    const double den = l + r_pu * h;
    return {h / den, l / den, 0.0};
}

// Series R-C branch: i1 = g (v1 - vc0 - k r i0), vc1 = vc0 + r (k i0 + i1).
struct CapCompanion {
    double g;
    double r;
    double k;
};

CapCompanion cap_companion(double c_pu, double r_pu, double omega_base, double h, bool trapezoidal) {
    const double c = c_pu / omega_base;
    const double r = trapezoidal ? h / (2.0 * c) : h / c;
    return {1.0 / (r_pu + r), r, trapezoidal ? 1.0 : 0.0};
}

}  // namespace

void GridParams::validate() const {
    if (connected && !(scl > 0.0)) throw std::invalid_argument("grid scl must be > 0");
    if (!(x_r_ratio > 0.0)) throw std::invalid_argument("grid x_r_ratio must be > 0");
    if (!(magnitude >= 0.0)) throw std::invalid_argument("grid magnitude must be >= 0");
    if (!(frequency > 0.0)) throw std::invalid_argument("grid frequency must be > 0");
    if (!std::isfinite(phase)) throw std::invalid_argument("grid phase must be finite");
}

void PlantParams::validate() const {
    if (!(l_f > 0.0) || !(c_f > 0.0) || !(x_tr > 0.0)) {
        throw std::invalid_argument("reactive plant elements must be > 0");
    }
    if (!(r_f >= 0.0) || !(r_tr >= 0.0) || !(r_c >= 0.0)) throw std::invalid_argument("plant resistances must be >= 0");
    if (!(s_base > 0.0) || !(omega_base > 0.0)) throw std::invalid_argument("plant bases must be > 0");
    if (!(floating_node_conductance > 0.0)) throw std::invalid_argument("floating_node_conductance must be > 0");
    if (!(grid.scl > 0.0)) throw std::invalid_argument("grid scl must be > 0");
    grid.validate();
}

std::pair<double, double> scl_to_impedance(double scl, double s_base, double x_r_ratio) {
    if (!(scl > 0.0)) throw std::invalid_argument("scl must be > 0");
    if (std::isinf(scl)) return {0.0, 0.0};
    const double z = s_base / scl;
    const double r = z / std::sqrt(1.0 + x_r_ratio * x_r_ratio);
    return {r, r * x_r_ratio};
}

std::string_view to_string(FaultKind kind) {
    switch (kind) {
        case FaultKind::single_phase: return "1ph";
        case FaultKind::two_phase: return "2ph";
        case FaultKind::two_phase_ground: return "2ph-g";
        case FaultKind::three_phase: return "3ph";
    }
    return "?";
}

FaultKind fault_kind_from_string(std::string_view name) {
    if (name == "1ph") return FaultKind::single_phase;
    if (name == "2ph") return FaultKind::two_phase;
    if (name == "2ph-g") return FaultKind::two_phase_ground;
    if (name == "3ph") return FaultKind::three_phase;
    throw std::invalid_argument("unknown fault kind '" + std::string(name) + "' (expected 1ph, 2ph, 2ph-g, 3ph)");
}

std::string_view to_string(Bus bus) { return bus == Bus::grid ? "grid" : "converter"; }

Bus bus_from_string(std::string_view name) {
    if (name == "grid") return Bus::grid;
    if (name == "converter") return Bus::converter;
    throw std::invalid_argument("unknown bus '" + std::string(name) + "' (expected grid or converter)");
}

void FaultSpec::validate() const {
    if (!(start < end)) throw std::invalid_argument("fault start must precede end");
    if (!(resistance > 0.0)) throw std::invalid_argument("fault resistance must be > 0");
}

void LoadSpec::validate() const {
    if (!(power >= 0.0)) throw std::invalid_argument("load power must be >= 0");
    if (!(connect < disconnect)) throw std::invalid_argument("load connect must precede disconnect");
}

Plant::Plant(PlantParams params) : params_(std::move(params)) {
    params_.validate();
    std::tie(r_g_, x_g_) = scl_to_impedance(params_.grid.scl, params_.s_base, params_.grid.x_r_ratio);
    if (!(x_g_ > 0.0)) throw std::invalid_argument("grid scl must be finite");
    projector_ = Mat3::Identity() - Mat3::Constant(1.0 / 3.0);
}

std::vector<FaultBranch> fault_branches(const FaultSpec& fault) {
    const auto ground = [&](int phase) { return FaultBranch{fault.bus, phase, -1, fault.resistance}; };
    switch (fault.kind) {
        case FaultKind::single_phase:
            return {ground(0)};
        case FaultKind::two_phase:
            return {FaultBranch{fault.bus, 1, 2, fault.resistance}};
        case FaultKind::two_phase_ground:
            return {ground(1), ground(2)};
        case FaultKind::three_phase:
            return {ground(0), ground(1), ground(2)};
    }
    return {};
}

double branch_voltage(const FaultBranch& branch, const ThreePhase& v) {
    const std::array<double, 3> x{v.a, v.b, v.c};
    return x[static_cast<std::size_t>(branch.from)] - (branch.to < 0 ? 0.0 : x[static_cast<std::size_t>(branch.to)]);
}

Mat3 Plant::fault_admittance(const Topology& topology, Bus bus) const {
    Mat3 y = Mat3::Zero();
    for (const FaultBranch& b : topology.faults) {
        if (b.bus != bus) continue;
        Vec3 d = Vec3::Zero();
        d(b.from) = 1.0;
        if (b.to >= 0) d(b.to) = -1.0;
        y += (1.0 / b.resistance) * d * d.transpose();
    }
    return y;
}

const Plant::Factorized& Plant::factorization(const Topology& topology, double h, Method method) {
    std::optional<Factorized>& slot = method == Method::trapezoidal ? trapezoidal_ : damped_;
    if (slot && slot->h == h && slot->topology == topology) return *slot;

    const auto& p = params_;
    const bool trap = method == Method::trapezoidal;
    const RlCompanion conv = rl_companion(p.l_f, p.r_f, p.omega_base, h, trap);
    const RlCompanion tr = rl_companion(p.x_tr, p.r_tr, p.omega_base, h, trap);
    const CapCompanion cap = cap_companion(p.c_f, p.r_c, p.omega_base, h, trap);
    const Mat3 zero_seq = Mat3::Constant(1.0 / 3.0);

    const Mat3 y_series = tr.g * projector_;
    Mat3 y_ss = (conv.g + cap.g + topology.load_converter) * projector_ + y_series +
                fault_admittance(topology, Bus::converter) + p.floating_node_conductance * zero_seq;
    Mat3 y_gg = y_series + topology.load_grid * projector_ + fault_admittance(topology, Bus::grid);
    if (topology.grid_connected) {
        y_gg += rl_companion(x_g_, r_g_, p.omega_base, h, trap).g * Mat3::Identity();
    } else {
        y_gg += p.floating_node_conductance * zero_seq;
    }

    Eigen::Matrix<double, 6, 6> y;
    y << y_ss, -y_series, -y_series, y_gg;
    slot = Factorized{topology, h, method, Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>>(y)};
    return *slot;
}

PlantState Plant::integrate(const PlantState& state, const ThreePhase& v_mod, const ThreePhase& e_prev,
                            const ThreePhase& e_next, const Topology& topology, double h, Method method) {
    const Factorized& f = factorization(topology, h, method);

    const auto& p = params_;
    const bool trap = method == Method::trapezoidal;
    const RlCompanion conv = rl_companion(p.l_f, p.r_f, p.omega_base, h, trap);
    const RlCompanion tr = rl_companion(p.x_tr, p.r_tr, p.omega_base, h, trap);
    const CapCompanion cap = cap_companion(p.c_f, p.r_c, p.omega_base, h, trap);

    const Vec3 i_m = vec(state.i_m);
    const Vec3 v_s = vec(state.v_s);
    const Vec3 i_t = vec(state.i_t);
    const Vec3 i_c = vec(state.i_c);
    const Vec3 v_g = vec(state.v_g);
    const Vec3 u = vec(v_mod);

    // Currents at the end of the step are hist + g * (own end voltages).
    const Vec3 hist_m = conv.a * i_m + projector_ * (conv.b * (u - v_s) + conv.g * u);
    const Vec3 v_c = vec(state.v_c);
    const Vec3 hist_c = cap.g * projector_ * (v_c + cap.k * cap.r * i_c);
    const Vec3 hist_t = tr.a * i_t + tr.b * projector_ * (v_s - v_g);

    Eigen::Matrix<double, 6, 1> rhs;
    rhs.head<3>() = hist_m + hist_c - hist_t;
    rhs.tail<3>() = hist_t;

    Vec3 hist_g = Vec3::Zero();
    RlCompanion grid{0.0, 0.0, 0.0};
    if (topology.grid_connected) {
        grid = rl_companion(x_g_, r_g_, p.omega_base, h, trap);
        hist_g = grid.a * vec(state.i_g) + grid.b * (vec(e_prev) - v_g) + grid.g * vec(e_next);
        rhs.tail<3>() += hist_g;
    }

    const Eigen::Matrix<double, 6, 1> v = f.lu.solve(rhs);
    const Vec3 v_s1 = v.head<3>();
    const Vec3 v_g1 = v.tail<3>();

    const Vec3 i_m1 = hist_m - conv.g * projector_ * v_s1;
    const Vec3 i_t1 = hist_t + tr.g * projector_ * (v_s1 - v_g1);
    const Vec3 i_c1 = cap.g * projector_ * v_s1 - hist_c;
    if (!finite(v_s1) || !finite(v_g1) || !finite(i_m1) || !finite(i_t1)) {
        throw NonFiniteState("plant state became non-finite");
    }

    PlantState next;
    next.v_s = phases(v_s1);
    next.v_g = phases(v_g1);
    next.i_m = phases(i_m1);
    next.i_t = phases(i_t1);
    next.i_c = phases(i_c1);
    next.v_c = phases(v_c + cap.r * (cap.k * i_c + i_c1));
    if (topology.grid_connected) next.i_g = phases(hist_g - grid.g * v_g1);
    return next;
}

PlantState Plant::step(const PlantState& state, const ThreePhase& v_mod, const ThreePhase& e_grid_prev,
                       const ThreePhase& e_grid, const Topology& topology, double dt) {
    const bool damped = discontinuity_ || !last_topology_ || !(*last_topology_ == topology);
    discontinuity_ = false;
    last_damped_ = damped;
    if (!last_topology_ || !(*last_topology_ == topology)) last_topology_ = topology;

    if (!damped) return integrate(state, v_mod, e_grid_prev, e_grid, topology, dt, Method::trapezoidal);

    const ThreePhase e_mid = phases(0.5 * (vec(e_grid_prev) + vec(e_grid)));
    const PlantState half = integrate(state, v_mod, e_grid_prev, e_mid, topology, 0.5 * dt, Method::backward_euler);
    return integrate(half, v_mod, e_mid, e_grid, topology, 0.5 * dt, Method::backward_euler);
}

GridSource::GridSource(const GridParams& params)
    : angle_(params.phase), frequency_(params.frequency), magnitude_(params.magnitude) {}

void GridSource::advance(double dt) {
    angle_ += kTwoPi * (frequency_ * dt + 0.5 * ramp_ * dt * dt);
    frequency_ += ramp_ * dt;
}

ThreePhase GridSource::voltage() const {
    return {magnitude_ * std::cos(angle_), magnitude_ * std::cos(angle_ - kTwoPi / 3.0),
            magnitude_ * std::cos(angle_ + kTwoPi / 3.0)};
}

ThreePhase grid_voltage(double t, const GridParams& params) {
    const double angle = params.phase + kTwoPi * params.frequency * t;
    const double m = params.magnitude;
    return {m * std::cos(angle), m * std::cos(angle - kTwoPi / 3.0), m * std::cos(angle + kTwoPi / 3.0)};
}

}  // namespace gfm

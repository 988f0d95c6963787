#include "properties.hpp"

#include "gfm/controller.hpp"
#include "gfm/frames.hpp"
#include "gfm/plant.hpp"
#include "gfm/presets.hpp"
#include "gfm/suite.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace gfm::test {

namespace {

using cplx = std::complex<double>;

const cplx kA = std::polar(1.0, kTwoPi / 3.0);

double dot(const ThreePhase& x, const ThreePhase& y) { return x.a * y.a + x.b * y.b + x.c * y.c; }

ThreePhase mid(const ThreePhase& x, const ThreePhase& y) {
    return {0.5 * (x.a + y.a), 0.5 * (x.b + y.b), 0.5 * (x.c + y.c)};
}

ThreePhase phasor_signal(const std::array<cplx, 3>& v, double angle) {
    const cplx r = std::polar(1.0, angle);
    return {std::real(v[0] * r), std::real(v[1] * r), std::real(v[2] * r)};
}

PropertyResult finish(double value, double limit, std::string detail) {
    return {value, limit, value <= limit, std::move(detail)};
}

}  // namespace

PropertyResult park_round_trip(std::uint64_t seed, int samples) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> angle(-20.0, 20.0);
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double a = u(rng);
        const double b = u(rng);
        const ThreePhase x{a, b, -a - b};
        const ThreePhase y = dq_to_abc(abc_to_dq(x, angle(rng)));
        worst = std::max({worst, std::abs(y.a - x.a), std::abs(y.b - x.b), std::abs(y.c - x.c)});
    }
    return finish(worst, 1.0e-12, fmt::format("{} samples", samples));
}

PropertyResult ddsrf_vs_symmetrical_components(std::uint64_t seed, int cases) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(0.2, 1.2);
    std::uniform_real_distribution<double> ph(-kPi, kPi);

    std::vector<std::array<cplx, 3>> sets;
    sets.push_back({cplx(0.5, 0.0), std::polar(1.0, -kTwoPi / 3.0), std::polar(1.0, kTwoPi / 3.0)});
    for (int i = 1; i < cases; ++i) {
        sets.push_back({std::polar(mag(rng), ph(rng)), std::polar(mag(rng), -kTwoPi / 3.0 + 0.3 * ph(rng)),
                        std::polar(mag(rng), kTwoPi / 3.0 + 0.3 * ph(rng))});
    }

    const double omega = kTwoPi * 50.0;
    const double dt = 20.0e-6;
    double worst = 0.0;
    for (const auto& v : sets) {
        const cplx pos = (v[0] + kA * v[1] + kA * kA * v[2]) / 3.0;
        const cplx neg = (v[0] + kA * kA * v[1] + kA * v[2]) / 3.0;
        DdsrfState state;
        for (int k = 0; k <= 10000; ++k) {
            const double theta = omega * k * dt;
            const SequenceFrames s = ddsrf_step(state, phasor_signal(v, theta), theta, dt);
            if (k < 9000) continue;
            // Positive frame sees V+, the frame at -theta sees the conjugate of V-.
            worst = std::max({worst, std::abs(cplx(s.dp, s.qp) - pos), std::abs(cplx(s.dn, s.qn) - std::conj(neg))});
        }
    }
    return finish(worst, 1.0e-3, fmt::format("{} phasor sets incl. phase-a sag to 0.5", sets.size()));
}

PropertyResult virtual_impedance_examples() {
    struct Case {
        double v_star, dp, qp, dn, qn, r, x;
    };
    const Case cases[] = {
        {1.0, 0.9, 0.0, 0.1, 0.0, 0.05, 0.2},
        {1.0, 1.0, 0.0, 0.0, 0.0, 0.05, 0.2},
        {1.05, 0.7, -0.3, 0.02, 0.15, 0.1, 0.4},
        {0.0, 0.0, 0.0, -0.4, 0.25, 0.05, 0.2},
    };
    double worst = 0.0;
    for (const Case& c : cases) {
        const SequenceFrames i = virtual_impedance({c.dp, c.qp, c.dn, c.qn}, c.v_star, {c.r, c.x, c.r, c.x});
        const cplx ip = cplx(c.v_star - c.dp, -c.qp) / cplx(c.r, c.x);
        const cplx in = cplx(-c.dn, -c.qn) / cplx(c.r, -c.x);
        worst = std::max({worst, std::abs(cplx(i.dp, i.qp) - ip), std::abs(cplx(i.dn, i.qn) - in)});
    }
    // Tabulated values to the printed precision.
    const SequenceFrames t = virtual_impedance({0.9, 0.0, 0.1, 0.0}, 1.0, {});
    const bool table = std::abs(t.dp - 0.11765) < 5e-6 && std::abs(t.qp + 0.47059) < 5e-6 &&
                       std::abs(t.dn + 0.11765) < 5e-6 && std::abs(t.qn + 0.47059) < 5e-6;
    PropertyResult r = finish(worst, 1.0e-9, "complex division per sequence");
    r.pass = r.pass && table;
    return r;
}

PropertyResult limiter_phase_peak(std::uint64_t seed, int pairs) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mp(1e-3, 3.0);
    std::uniform_real_distribution<double> mn(1e-3, 1.5);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    const LimiterParams params;
    int violations = 0;
    int over_clipped = 0;
    double worst_peak = 0.0;
    constexpr int kSweep = 2000;
    for (int n = 0; n < pairs; ++n) {
        const cplx p = std::polar(mp(rng), ph(rng));
        const cplx q = std::polar(mn(rng), ph(rng));
        const SequenceFrames in{p.real(), p.imag(), q.real(), q.imag()};
        const LimitedCurrent out = limit_current(in, params);
        double peak = 0.0;
        for (int k = 0; k < kSweep; ++k) {
            const ThreePhase x = sequences_to_abc(out.current, kTwoPi * k / kSweep);
            peak = std::max({peak, std::abs(x.a), std::abs(x.b), std::abs(x.c)});
        }
        worst_peak = std::max(worst_peak, peak);
        if (peak > params.i_lim * (1.0 + 1.0e-12)) ++violations;
        // Both sequences share one factor, i_lim over the summed magnitudes when that sum is too large.
        const double bound = std::abs(p) + std::abs(q);
        const double expected = bound > params.i_lim ? params.i_lim / bound : 1.0;
        const double ratio_p = std::abs(cplx(out.current.dp, out.current.qp)) / std::abs(p);
        const double ratio_n = std::abs(cplx(out.current.dn, out.current.qn)) / std::abs(q);
        if (std::abs(ratio_p - expected) > 1e-12 || std::abs(ratio_n - expected) > 1e-12) ++over_clipped;
    }
    PropertyResult r = finish(violations + over_clipped, 0.0,
                              fmt::format("{} pairs, worst swept peak {:.6f}, {} over limit, {} off the common scale",
                                          pairs, worst_peak, violations, over_clipped));
    return r;
}

PropertyResult droop_arithmetic() {
    SyncParams sp;
    double err = std::abs(droop_power(1.0, sp));
    err = std::max(err, std::abs(droop_power(0.95, sp) - 1.0));
    // Frequency at which droop carries a 1.3 p.u. deficit, in Hz.
    const double omega = sp.omega_ref - 1.3 / sp.k_droop;
    err = std::max(err, std::abs(droop_power(omega, sp) - 1.3));
    err = std::max(err, std::abs(omega * 50.0 - 46.75));
    return finish(err, 1.0e-12, "P_droop = k_droop (omega_ref - omega)");
}

PropertyResult plant_energy_balance() {
    PlantParams p;
    p.grid.scl = 40.0e6;
    Plant plant(p);
    const double dt = 20.0e-6;
    const double wb = p.omega_base;
    Topology topo;
    topo.load_converter = 0.4;
    topo.load_grid = 0.3;

    const auto stored = [&](const PlantState& s) {
        return 0.5 / wb *
               (p.l_f * dot(s.i_m, s.i_m) + p.x_tr * dot(s.i_t, s.i_t) + plant.grid_reactance() * dot(s.i_g, s.i_g) +
                p.c_f * dot(s.v_c, s.v_c));
    };

    PlantState s;
    double supplied = 0.0;
    double dissipated = 0.0;
    double w0 = 0.0;
    double throughput = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const double t0 = k * dt;
        const double angle = kTwoPi * 50.0 * t0 + 0.2;
        const ThreePhase v_mod{1.05 * std::cos(angle), 1.05 * std::cos(angle - kTwoPi / 3.0),
                               1.05 * std::cos(angle + kTwoPi / 3.0)};
        const ThreePhase e0 = grid_voltage(t0, p.grid);
        const ThreePhase e1 = grid_voltage(t0 + dt, p.grid);
        const PlantState n = plant.step(s, v_mod, e0, e1, topo, dt);
        if (k == 2000) w0 = stored(s);
        if (k >= 2000) {
            // Midpoint products are exact for trapezoidal integration of linear elements.
            const ThreePhase im = mid(s.i_m, n.i_m);
            const ThreePhase it = mid(s.i_t, n.i_t);
            const ThreePhase ig = mid(s.i_g, n.i_g);
            const ThreePhase ic = mid(s.i_c, n.i_c);
            const ThreePhase vs = mid(s.v_s, n.v_s);
            const ThreePhase vg = mid(s.v_g, n.v_g);
            const double p_conv = dot(v_mod, im);
            const double p_grid = dot(mid(e0, e1), ig);
            supplied += dt * (p_conv + p_grid);
            throughput += dt * (std::abs(p_conv) + std::abs(p_grid));
            dissipated += dt * (p.r_f * dot(im, im) + p.r_tr * dot(it, it) + plant.grid_resistance() * dot(ig, ig) +
                                p.r_c * dot(ic, ic) + topo.load_converter * dot(vs, vs) + topo.load_grid * dot(vg, vg));
        }
        s = n;
    }
    const double delta_w = stored(s) - w0;
    const double residual = std::abs(supplied - dissipated - delta_w);
    return finish(residual / throughput, 1.0e-3,
                  fmt::format("supplied {:.6f}, dissipated {:.6f}, stored change {:.3e}", supplied, dissipated, delta_w));
}

PropertyResult determinism(const Scenario& scenario) {
    const std::uint64_t h1 = record_hash(run(scenario).record);
    const std::uint64_t h2 = record_hash(run(scenario).record);
    PropertyResult r{h1 == h2 ? 0.0 : 1.0, 0.0, h1 == h2, fmt::format("{}: {:016x} / {:016x}", scenario.name, h1, h2)};
    return r;
}

PropertyResult dt_halving(double dt, std::vector<DriftMetric>* metrics) {
    const std::pair<std::string, std::vector<std::string>> picks[] = {
        {"s2", {"loaded_voltage"}},
        {"s3", {"settled_frequency_hz", "settled_p_ac"}},
        {"s5d", {"p_esc_peak"}},
    };
    double worst = 0.0;
    std::string worst_name;
    for (const auto& [name, wanted] : picks) {
        Scenario coarse = preset(name);
        coarse.dt = dt;
        Scenario fine = coarse;
        fine.dt = dt / 2.0;
        const ScenarioReport a = evaluate(coarse, run(coarse));
        const ScenarioReport b = evaluate(fine, run(fine));
        for (const std::string& m : wanted) {
            const Check* ca = a.find(m);
            const Check* cb = b.find(m);
            const double va = ca ? ca->value : std::nan("");
            const double vb = cb ? cb->value : std::nan("");
            const double drift = std::abs(va - vb) / std::abs(vb);
            if (metrics) metrics->push_back({name, m, va, vb});
            if (!(drift <= worst)) {
                worst = std::isnan(drift) ? INFINITY : drift;
                worst_name = name + "/" + m;
            }
        }
    }
    return finish(worst, 5.0e-3, fmt::format("largest relative drift in {}", worst_name));
}

IslandedSolution islanded_fixed_point(const Scenario& s, double v_set, double p_ref, double load_converter,
                                      double load_grid) {
    const PlantParams& pl = s.plant;
    const SyncParams& sync = s.control.sync;
    const AvrParams& avr = s.control.avr;
    const cplx z_v(s.control.impedance.r_vp, s.control.impedance.x_vp);

    struct Point {
        cplx v;
        double p_esc;
    };
    const auto solve_at = [&](double omega) {
        const cplx z_c = pl.r_c + 1.0 / cplx(0.0, omega * pl.c_f);
        const cplx z_t(pl.r_tr, omega * pl.x_tr);
        cplx y = 1.0 / z_c + load_converter;
        if (load_grid > 0.0) y += load_grid / (1.0 + load_grid * z_t);
        const double p_total = p_ref + sync.k_droop * (sync.omega_ref - omega);
        cplx v(v_set, 0.0);
        double v_star = v_set;
        for (int it = 0; it < 5000; ++it) {
            const cplx next = (v_star / z_v + p_total / std::conj(v)) / (y + 1.0 / z_v);
            const double q = std::imag(next * std::conj(next * y));
            const double vs_next = std::clamp(v_set + avr.k_q * (s.initial.q_ref - q), avr.v_min, avr.v_max);
            const double change = std::abs(next - v) + std::abs(vs_next - v_star);
            v = 0.5 * (v + next);
            v_star = 0.5 * (v_star + vs_next);
            if (change < 1e-15) break;
        }
        const cplx i_v = (v_star - v) / z_v;
        return Point{v, std::real(v * std::conj(i_v))};
    };

    double lo = sync.omega_ref - 0.2;
    double hi = sync.omega_ref + 0.2;
    const double f_lo = solve_at(lo).p_esc;
    if (std::signbit(f_lo) == std::signbit(solve_at(hi).p_esc)) {
        throw std::runtime_error("islanded oracle: no sign change of virtual power in the frequency bracket");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double m = 0.5 * (lo + hi);
        if (std::signbit(solve_at(m).p_esc) == std::signbit(f_lo)) {
            lo = m;
        } else {
            hi = m;
        }
    }
    IslandedSolution out;
    out.omega = 0.5 * (lo + hi);
    out.v_converter = solve_at(out.omega).v;
    const cplx z_t(pl.r_tr, out.omega * pl.x_tr);
    out.v_grid = load_grid > 0.0 ? out.v_converter / (1.0 + load_grid * z_t) : out.v_converter;
    return out;
}

}  // namespace gfm::test

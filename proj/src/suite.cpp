#include "gfm/suite.hpp"

#include "gfm/output.hpp"
#include "gfm/presets.hpp"

#include "json.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <thread>

namespace gfm {

namespace {

using cplx = std::complex<double>;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Setpoints final_setpoints(const Scenario& s) {
    Setpoints sp = s.initial;
    for (const Event& e : s.events) {
        if (const auto* step = std::get_if<SetpointStep>(&e.action)) {
            if (step->p_ref) sp.p_ref = *step->p_ref;
            if (step->q_ref) sp.q_ref = *step->q_ref;
        } else if (const auto* ramp = std::get_if<VoltageRamp>(&e.action)) {
            sp.v_set = ramp->target;
        }
    }
    return sp;
}

struct IslandedResidual {
    const Scenario& s;
    Setpoints sp;
    double load_converter;
    double load_grid;

    [[nodiscard]] cplx node_admittance(double omega) const {
        const PlantParams& p = s.plant;
        cplx y = 1.0 / (p.r_c + 1.0 / cplx(0.0, omega * p.c_f)) + load_converter;
        if (load_grid > 0.0) y += 1.0 / (cplx(p.r_tr, omega * p.x_tr) + 1.0 / load_grid);
        return y;
    }

    [[nodiscard]] double v_star(cplx v, double omega) const {
        const cplx i_m = v * node_admittance(omega);
        const double q = std::imag(v * std::conj(i_m));
        const AvrParams& a = s.control.avr;
        return std::clamp(sp.v_set + a.k_q * (sp.q_ref - q), a.v_min, a.v_max);
    }

    [[nodiscard]] Eigen::Vector3d operator()(const Eigen::Vector3d& x) const {
        const cplx v(x(0), x(1));
        const double omega = x(2);
        const VirtualImpedanceParams& z = s.control.impedance;
        const cplx i_m = v * node_admittance(omega);
        const cplx i_v = (v_star(v, omega) - v) / cplx(z.r_vp, z.x_vp);
        const double p_total = sp.p_ref + droop_power(omega, s.control.sync);
        const cplx i_cs = p_total * v / std::norm(v);
        const cplx r = i_m - i_v - i_cs;
        return {r.real(), r.imag(), std::real(v * std::conj(i_v))};
    }
};

struct Samples {
    const TimeSeriesRecord& record;

    [[nodiscard]] double t(std::size_t i) const { return record.at(i, Channel::t); }

    // Statistics over [a, b], or nullopt when the record does not reach the window.
    [[nodiscard]] std::optional<SettledSummary> window(Channel c, double a, double b) const {
        try {
            return measure_settled(record, c, a, b);
        } catch (const std::invalid_argument&) {
            return std::nullopt;
        }
    }
};

Check make_check(std::string metric, double value, std::string requirement, bool pass) {
    return {std::move(metric), value, std::move(requirement), pass && !std::isnan(value)};
}

Check at_most(std::string metric, std::optional<double> value, double limit) {
    const double v = value.value_or(kNaN);
    return make_check(std::move(metric), v, fmt::format("<= {}", limit), v <= limit);
}

Check within(std::string metric, std::optional<double> value, double target, double tol) {
    const double v = value.value_or(kNaN);
    return make_check(std::move(metric), v, fmt::format("{} +/- {}", target, tol), std::abs(v - target) <= tol);
}

Check no_divergence(const RunResult& r) {
    return make_check("diverged", r.diverged ? 1.0 : 0.0, "== 0", !r.diverged);
}

Check frequency_band(const Scenario& s, const RunResult& r) {
    const double f_nom = s.control.sync.omega_base / kTwoPi;
    double worst = r.record.empty() ? kNaN : 0.0;
    for (const double f : r.record.channel(Channel::f_s)) worst = std::max(worst, std::abs(f - f_nom));
    return at_most("max_frequency_deviation_hz", worst, 5.0);
}

// Peak converter current over [a, b] from the per-sample block maxima.
std::optional<double> current_peak(const Samples& x, double a, double b) {
    const auto w = x.window(Channel::im_peak, a, b);
    if (!w) return std::nullopt;
    return w->max;
}

void evaluate_s0(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    rep.checks.push_back(at_most("max_phase_current", current_peak(x, 0.0, s.duration), kCurrentCap));
    const double f_nom = s.control.sync.omega_base / kTwoPi;
    double exit_time = kNaN;
    int reentries = 0;
    for (std::size_t i = 0; i < r.record.size(); ++i) {
        const bool outside = std::abs(r.record.at(i, Channel::f_s) - f_nom) > 5.0;
        if (std::isnan(exit_time)) {
            if (outside) exit_time = x.t(i);
        } else if (!outside) {
            ++reentries;
        }
    }
    if (std::isnan(exit_time) && r.diverged) exit_time = r.divergence_time;
    rep.checks.push_back(make_check("band_exit_time", exit_time, "< 5", exit_time < 5.0));
    rep.checks.push_back(make_check("band_reentry_samples", reentries, "== 0", reentries == 0 && !std::isnan(exit_time)));
    rep.checks.push_back(make_check("diverged", r.diverged ? 1.0 : 0.0, "== 1", r.diverged));
}

void evaluate_setpoint_steps(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    int n = 0;
    for (std::size_t k = 0; k < s.events.size(); ++k) {
        const auto* step = std::get_if<SetpointStep>(&s.events[k].action);
        if (!step || !step->p_ref) continue;
        ++n;
        const double a = s.events[k].time + 0.3;
        const double b = k + 1 < s.events.size() ? s.events[k + 1].time - 1.0e-9 : s.duration;
        std::optional<double> p_err;
        std::optional<double> esc;
        if (const auto w = x.window(Channel::p_ac, a, b)) {
            p_err = std::max(std::abs(w->max - *step->p_ref), std::abs(w->min - *step->p_ref));
        }
        if (const auto w = x.window(Channel::p_esc, a, b)) esc = std::max(std::abs(w->max), std::abs(w->min));
        rep.checks.push_back(at_most(fmt::format("p_ac_error_after_step_{}", n), p_err, 0.03));
        const double e = esc.value_or(kNaN);
        rep.checks.push_back(make_check(fmt::format("p_esc_after_step_{}", n), e, "< 0.02", e < 0.02));
    }
}

void evaluate_s2(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    const std::vector<double> mag = space_vector_magnitude(r.record, Channel::vg_a);
    const double load_on = s.loads.empty() ? s.duration : s.loads.front().connect;
    double reference = kNaN;
    if (const auto w = x.window(Channel::t, load_on - 0.2, load_on - 1.0e-9)) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < r.record.size(); ++i) {
            if (x.t(i) >= load_on - 0.2 && x.t(i) < load_on) {
                sum += mag[i];
                ++n;
            }
        }
        if (n) reference = sum / static_cast<double>(n);
    }
    double t10 = kNaN;
    double t90 = kNaN;
    for (std::size_t i = 0; i < mag.size(); ++i) {
        if (std::isnan(t10) && mag[i] >= 0.1 * reference) t10 = x.t(i);
        if (std::isnan(t90) && mag[i] >= 0.9 * reference) t90 = x.t(i);
    }
    rep.checks.push_back(within("voltage_rise_10_90_s", t90 - t10, 0.2, 0.01));

    if (!s.loads.empty()) {
        const LoadSpec& load = s.loads.front();
        const IslandedOperatingPoint op = islanded_operating_point(
            s, load.bus == Bus::converter ? load.power : 0.0, load.bus == Bus::grid ? load.power : 0.0);
        const double expected = load.bus == Bus::grid ? op.v_grid : op.v_converter;
        const auto& m = load.bus == Bus::grid ? mag : space_vector_magnitude(r.record, Channel::vs_a);
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < r.record.size(); ++i) {
            if (x.t(i) >= load.disconnect - 0.1 && x.t(i) < load.disconnect) {
                sum += m[i];
                ++n;
            }
        }
        rep.checks.push_back(within("loaded_voltage", n ? std::optional(sum / static_cast<double>(n)) : std::nullopt,
                                    expected, 0.02));
    }
    rep.checks.push_back(no_divergence(r));
}

void evaluate_s3(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    const double end = s.duration;
    const auto f = x.window(Channel::f_s, end - 0.5, end);
    const auto p = x.window(Channel::p_ac, end - 0.5, end);
    rep.checks.push_back(within("settled_frequency_hz", f ? std::optional(f->mean) : std::nullopt, 46.75, 0.1));
    rep.checks.push_back(within("settled_p_ac", p ? std::optional(p->mean) : std::nullopt, 0.8, 0.03));
    rep.checks.push_back(no_divergence(r));
}

void evaluate_s4(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    std::vector<FaultSpec> faults = s.faults;
    std::sort(faults.begin(), faults.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t k = 0; k < faults.size(); ++k) {
        const FaultSpec& f = faults[k];
        const std::string tag = fmt::format("{}_{}", k + 1, to_string(f.kind));
        rep.checks.push_back(
            at_most("peak_current_fault_" + tag, current_peak(x, f.start + kInceptionExclusion, f.end), kCurrentCap));

        const double boundary = k + 1 < faults.size() ? faults[k + 1].start : s.duration;
        const auto pre = x.window(Channel::p_ac, f.start - 0.2, f.start - 1.0e-9);
        double recovery = kNaN;
        if (pre && !r.record.empty() && r.record.rows.back()[0] >= boundary - 2.0 * r.record.interval) {
            double last_out = -1.0;
            for (std::size_t i = 0; i < r.record.size(); ++i) {
                const double t = x.t(i);
                if (t < f.end || t >= boundary) continue;
                if (std::abs(r.record.at(i, Channel::p_ac) - pre->mean) > 0.05) last_out = t;
            }
            recovery = last_out < 0.0 ? 0.0 : last_out + r.record.interval - f.end;
        }
        rep.checks.push_back(at_most("p_ac_recovery_s_fault_" + tag, recovery, 0.5));
    }
    rep.checks.push_back(frequency_band(s, r));
    rep.checks.push_back(no_divergence(r));
}

void evaluate_s5(const Scenario& s, const RunResult& r, ScenarioReport& rep) {
    const Samples x{r.record};
    double jump = s.duration;
    for (const Event& e : s.events) {
        if (std::holds_alternative<PhaseJump>(e.action)) {
            jump = e.time;
            break;
        }
    }
    const auto before = current_peak(x, 0.0, jump - 1.0e-9);
    const auto after = current_peak(x, jump + kInceptionExclusion, s.duration);
    std::optional<double> peak;
    if (before && after) peak = std::max(*before, *after);
    rep.checks.push_back(at_most("max_phase_current", peak, kCurrentCap));
    if (s.initial.p_ref > 0.0) {
        const auto w = x.window(Channel::p_esc, jump, s.duration);
        rep.checks.push_back(within("p_esc_peak", w ? std::optional(w->max) : std::nullopt, 4.0, 1.0));
    } else {
        double reversal = kNaN;
        for (std::size_t i = 0; i < r.record.size(); ++i) {
            if (x.t(i) >= jump && r.record.at(i, Channel::p_ac) > 0.0) {
                reversal = x.t(i) - jump;
                break;
            }
        }
        rep.checks.push_back(at_most("p_ac_reversal_s", reversal, 0.1));
    }
    rep.checks.push_back(frequency_band(s, r));
    rep.checks.push_back(no_divergence(r));
}

}  // namespace

bool ScenarioReport::pass() const {
    if (!error.empty() || checks.empty()) return false;
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* ScenarioReport::find(std::string_view metric) const {
    for (const Check& c : checks) {
        if (c.metric == metric) return &c;
    }
    return nullptr;
}

bool SuiteReport::pass() const {
    return !scenarios.empty() &&
           std::all_of(scenarios.begin(), scenarios.end(), [](const ScenarioReport& s) { return s.pass(); });
}

IslandedOperatingPoint islanded_operating_point(const Scenario& scenario, double load_converter, double load_grid) {
    const IslandedResidual f{scenario, final_setpoints(scenario), load_converter, load_grid};
    const double p_load = load_converter + load_grid;
    Eigen::Vector3d x(1.0, 0.0, scenario.control.sync.omega_ref - (p_load - f.sp.p_ref) / scenario.control.sync.k_droop);
    for (int it = 0; it < 100; ++it) {
        const Eigen::Vector3d r = f(x);
        if (r.norm() < 1.0e-14) break;
        Eigen::Matrix3d jac;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d dx = Eigen::Vector3d::Zero();
            dx(j) = 1.0e-7;
            jac.col(j) = (f(x + dx) - f(x - dx)) / 2.0e-7;
        }
        x -= jac.partialPivLu().solve(r);
    }
    if (!(f(x).norm() < 1.0e-9)) throw std::runtime_error("islanded operating point did not converge");

    const cplx v(x(0), x(1));
    const double omega = x(2);
    const PlantParams& p = scenario.plant;
    IslandedOperatingPoint op;
    op.omega = omega;
    op.v_converter = std::abs(v);
    op.v_grid = load_grid > 0.0
                    ? std::abs(v * (1.0 / load_grid) / (cplx(p.r_tr, omega * p.x_tr) + 1.0 / load_grid))
                    : std::abs(v);
    op.v_star = f.v_star(v, omega);
    const cplx s = v * std::conj(v * f.node_admittance(omega));
    op.p_ac = s.real();
    op.q_ac = s.imag();
    return op;
}

std::vector<double> space_vector_magnitude(const TimeSeriesRecord& record, Channel a) {
    const auto ia = static_cast<std::size_t>(a);
    std::vector<double> out;
    out.reserve(record.size());
    for (const auto& row : record.rows) {
        const AlphaBeta v = abc_to_alpha_beta({row[ia], row[ia + 1], row[ia + 2]});
        out.push_back(std::hypot(v.alpha, v.beta));
    }
    return out;
}

ScenarioReport evaluate(const Scenario& scenario, const RunResult& result) {
    ScenarioReport rep;
    rep.scenario = scenario.name;
    rep.expect_divergence = scenario.expect_divergence;
    rep.diverged = result.diverged;
    rep.divergence_time = result.divergence_time;
    rep.diagnostic = result.diagnostic;

    const std::string& n = scenario.name;
    if (n == "s0") {
        evaluate_s0(scenario, result, rep);
    } else if (n == "s1") {
        evaluate_setpoint_steps(scenario, result, rep);
        rep.checks.push_back(frequency_band(scenario, result));
        rep.checks.push_back(no_divergence(result));
    } else if (n == "s2") {
        evaluate_s2(scenario, result, rep);
        rep.checks.push_back(frequency_band(scenario, result));
    } else if (n == "s3") {
        evaluate_s3(scenario, result, rep);
        rep.checks.push_back(frequency_band(scenario, result));
    } else if (n == "s4") {
        evaluate_s4(scenario, result, rep);
    } else if (n == "s5c" || n == "s5d") {
        evaluate_s5(scenario, result, rep);
    } else if (scenario.expect_divergence) {
        rep.checks.push_back(make_check("diverged", result.diverged ? 1.0 : 0.0, "== 1", result.diverged));
    } else {
        if (scenario.control.mode == ControlMode::esc) rep.checks.push_back(frequency_band(scenario, result));
        rep.checks.push_back(no_divergence(result));
    }
    return rep;
}

ScenarioReport run_and_report(const Scenario& scenario, const std::filesystem::path& out_dir, bool plots) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioReport rep;
    try {
        const RunResult result = run(scenario);
        rep = evaluate(scenario, result);
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path csv = out_dir / (scenario.name + ".csv");
        write_csv(result.record, csv);
        if (plots && !result.record.empty()) emit_plot(result.record, scenario.name, csv, out_dir);
    } catch (const std::exception& e) {
        rep.scenario = scenario.name;
        rep.expect_divergence = scenario.expect_divergence;
        rep.error = e.what();
    }
    rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

SuiteReport run_suite(const SuiteOptions& options) {
    const std::vector<std::string> names = options.scenarios.empty() ? preset_names() : options.scenarios;
    SuiteReport report;
    report.scenarios.resize(names.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < names.size(); i = next++) {
            Scenario s;
            try {
                s = preset(names[i]);
                if (options.dt) s.dt = *options.dt;
                if (options.mode) s.control.mode = *options.mode;
            } catch (const std::exception& e) {
                report.scenarios[i].scenario = names[i];
                report.scenarios[i].error = e.what();
                continue;
            }
            report.scenarios[i] = run_and_report(s, options.out_dir, options.plots);
        }
    };
    const unsigned n_threads = std::clamp<unsigned>(options.jobs, 1, static_cast<unsigned>(names.size()));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < n_threads; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::filesystem::create_directories(options.out_dir);
    std::ofstream out(options.out_dir / "summary.json");
    if (!out) throw std::runtime_error("cannot write summary.json in '" + options.out_dir.string() + "'");
    out << summary_json(report) << '\n';
    return report;
}

std::string summary_json(const SuiteReport& report) {
    nlohmann::json doc;
    doc["pass"] = report.pass();
    doc["scenarios"] = nlohmann::json::array();
    for (const ScenarioReport& s : report.scenarios) {
        nlohmann::json j;
        j["name"] = s.scenario;
        j["pass"] = s.pass();
        j["expected_divergent"] = s.expect_divergence;
        j["diverged"] = s.diverged;
        j["divergence_time"] = s.diverged ? nlohmann::json(s.divergence_time) : nlohmann::json(nullptr);
        j["diagnostic"] = s.diagnostic;
        if (!s.error.empty()) j["error"] = s.error;
        j["wall_time_s"] = s.wall_time;
        j["checks"] = nlohmann::json::array();
        for (const Check& c : s.checks) {
            j["checks"].push_back({{"metric", c.metric},
                                   {"value", std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr)},
                                   {"requirement", c.requirement},
                                   {"pass", c.pass}});
        }
        doc["scenarios"].push_back(std::move(j));
    }
    return doc.dump(2);
}

}  // namespace gfm

#include "gfm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace gfm {

namespace {

constexpr std::array<std::string_view, kChannelCount> kChannelNames = {
    "t",
    "vs_a", "vs_b", "vs_c",
    "is_a", "is_b", "is_c",
    "im_a", "im_b", "im_c",
    "vg_a", "vg_b", "vg_c",
    "ig_a", "ig_b", "ig_c",
    "f_s", "f_grid",
    "p_ac", "q_ac", "p_cs", "p_esc", "p_droop",
    "v_star", "vs_pos", "vs_neg",
    "iref_peak", "limiter_active", "im_peak",
};

// Index of the first step with k * dt >= time.
std::int64_t step_index(double time, double dt) {
    return static_cast<std::int64_t>(std::ceil(time / dt - 1.0e-9));
}

double max_abs(const ThreePhase& x) { return std::max({std::abs(x.a), std::abs(x.b), std::abs(x.c)}); }

struct IndexedEvent {
    std::int64_t step;
    const EventAction* action;
};

struct FaultWindow {
    std::int64_t begin;
    std::int64_t end;
    std::vector<FaultBranch> branches;
    std::vector<bool> open;
    std::vector<double> last_voltage;
};

struct Window {
    std::int64_t begin;
    std::int64_t end;
    [[nodiscard]] bool contains(std::int64_t k) const { return k >= begin && k < end; }
};

constexpr double kPrerollWashout = 0.05;

// Lock-step controller + plant co-simulation shared by initialize() and run().
class Simulation {
public:
    explicit Simulation(const Scenario& scenario)
        : sc_(scenario), plant_(scenario.plant), grid_(scenario.plant.grid), setpoints_(scenario.initial) {
        topology_.grid_connected = scenario.plant.grid.connected;
        ctrl_ = make_controller_state(scenario.control, scenario.plant.grid.phase, scenario.initial.v_set);
    }

    Simulation(const Scenario& scenario, const InitialState& init) : Simulation(scenario) {
        ctrl_ = init.controller;
        state_ = init.plant;
        grid_ = init.grid;
    }

    void rewind_grid(double seconds) { grid_.jump_phase(-kTwoPi * grid_.frequency() * seconds); }
    void align_controller_angle() { ctrl_.sync.theta = grid_.angle(); }

    void prepare_events() {
        for (const Event& e : sc_.events) events_.push_back({step_index(e.time, sc_.dt), &e.action});
        for (const FaultSpec& f : sc_.faults) {
            std::vector<FaultBranch> branches = fault_branches(f);
            const std::size_t n = branches.size();
            fault_windows_.push_back({step_index(f.start, sc_.dt), step_index(f.end, sc_.dt), std::move(branches),
                                      std::vector<bool>(n, false), std::vector<double>(n, 0.0)});
        }
        for (const LoadSpec& l : sc_.loads) {
            load_windows_.push_back({step_index(l.connect, sc_.dt), step_index(l.disconnect, sc_.dt)});
        }
    }

    // One step from t_k to t_{k+1}; returns the controller output evaluated at t_k.
    ControllerOutput step(std::int64_t k, const Setpoints& sp) {
        if (ramp_end_ && k >= *ramp_end_) {
            grid_.set_frequency_ramp(0.0);
            ramp_end_.reset();
        }
        update_topology(k);
        out_ = controller_step(ctrl_, sc_.control, sp, state_.v_s, state_.i_m, sc_.dt);
        const ThreePhase e_prev = grid_.voltage();
        grid_.advance(sc_.dt);
        const ThreePhase e_next = grid_.voltage();
        before_ = state_;
        state_ = plant_.step(state_, out_.v_mod, e_prev, e_next, topology_, sc_.dt);
        return out_;
    }

    void apply_events(std::int64_t k) {
        while (next_event_ < events_.size() && events_[next_event_].step <= k) {
            std::visit([&](const auto& a) { apply(a, k); }, *events_[next_event_].action);
            ++next_event_;
        }
    }

    [[nodiscard]] const PlantState& state_before() const { return before_; }
    [[nodiscard]] const PlantState& state() const { return state_; }
    [[nodiscard]] const ControllerState& controller() const { return ctrl_; }
    [[nodiscard]] const GridSource& grid() const { return grid_; }
    [[nodiscard]] const Setpoints& setpoints() const { return setpoints_; }

private:
    void update_topology(std::int64_t k) {
        topology_.faults.clear();
        for (FaultWindow& w : fault_windows_) {
            if (k < w.begin) continue;
            for (std::size_t b = 0; b < w.branches.size(); ++b) {
                if (w.open[b]) continue;
                const FaultBranch& branch = w.branches[b];
                const double v = branch_voltage(branch, branch.bus == Bus::grid ? state_.v_g : state_.v_s);
                if (k >= w.end && k > w.begin && (v == 0.0 || std::signbit(v) != std::signbit(w.last_voltage[b]))) {
                    w.open[b] = true;
                    continue;
                }
                w.last_voltage[b] = v;
                topology_.faults.push_back(branch);
            }
        }
        topology_.load_converter = 0.0;
        topology_.load_grid = 0.0;
        for (std::size_t i = 0; i < load_windows_.size(); ++i) {
            if (!load_windows_[i].contains(k)) continue;
            const LoadSpec& l = sc_.loads[i];
            (l.bus == Bus::grid ? topology_.load_grid : topology_.load_converter) += l.power;
        }
    }

    void apply(const SetpointStep& e, std::int64_t) {
        if (e.p_ref) setpoints_.p_ref = *e.p_ref;
        if (e.q_ref) setpoints_.q_ref = *e.q_ref;
    }
    void apply(const BreakerOperation& e, std::int64_t) {
        topology_.grid_connected = e.close;
        if (!e.close) state_.i_g = {};
    }
    void apply(const PhaseJump& e, std::int64_t) {
        grid_.jump_phase(e.degrees * kPi / 180.0);
        plant_.mark_discontinuity();
    }
    void apply(const FrequencyRamp& e, std::int64_t k) {
        grid_.set_frequency_ramp(e.rate);
        ramp_end_ = k + step_index(e.duration, sc_.dt);
    }
    void apply(const VoltageRamp& e, std::int64_t) { setpoints_.v_set = e.target; }

    const Scenario& sc_;
    Plant plant_;
    GridSource grid_;
    ControllerState ctrl_;
    PlantState state_;
    PlantState before_;
    Topology topology_;
    Setpoints setpoints_;
    ControllerOutput out_;
    std::vector<IndexedEvent> events_;
    std::size_t next_event_{0};
    std::vector<FaultWindow> fault_windows_;
    std::vector<Window> load_windows_;
    std::optional<std::int64_t> ramp_end_;
};

}  // namespace

std::string_view event_type_name(const EventAction& action) {
    struct Namer {
        std::string_view operator()(const SetpointStep&) const { return "setpoint"; }
        std::string_view operator()(const BreakerOperation&) const { return "breaker"; }
        std::string_view operator()(const PhaseJump&) const { return "phase_jump"; }
        std::string_view operator()(const FrequencyRamp&) const { return "frequency_ramp"; }
        std::string_view operator()(const VoltageRamp&) const { return "voltage_ramp"; }
    };
    return std::visit(Namer{}, action);
}

void Scenario::validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    if (!(dt > 0.0) || dt > 1.0e-3) throw std::invalid_argument("dt must be in (0, 1 ms]");
    if (!(record_interval >= dt)) throw std::invalid_argument("record_interval must be >= dt");
    if (!(preroll >= 0.0)) throw std::invalid_argument("preroll must be >= 0");
    control.validate();
    plant.validate();
    if (std::abs(initial.p_ref) > 1.0) throw std::invalid_argument("|p_ref| must be <= 1");
    double last = -std::numeric_limits<double>::infinity();
    for (const Event& e : events) {
        if (e.time < last) throw std::invalid_argument("events must be sorted by time");
        if (!(e.time >= 0.0) || !(e.time < duration)) {
            throw std::invalid_argument("event time must lie in [0, duration)");
        }
        if (const auto* s = std::get_if<SetpointStep>(&e.action); s && s->p_ref && std::abs(*s->p_ref) > 1.0) {
            throw std::invalid_argument("|p_ref| must be <= 1");
        }
        if (const auto* r = std::get_if<FrequencyRamp>(&e.action); r && !(r->duration > 0.0)) {
            throw std::invalid_argument("frequency ramp duration must be > 0");
        }
        last = e.time;
    }
    for (const FaultSpec& f : faults) {
        f.validate();
        if (f.start < 0.0 || f.start >= duration) throw std::invalid_argument("fault start outside the run");
    }
    for (const LoadSpec& l : loads) {
        l.validate();
        if (l.connect < 0.0 || l.connect >= duration) throw std::invalid_argument("load connection outside the run");
    }
}

const std::array<std::string_view, kChannelCount>& TimeSeriesRecord::channel_names() { return kChannelNames; }

Channel TimeSeriesRecord::channel_from_name(std::string_view name) {
    const auto it = std::find(kChannelNames.begin(), kChannelNames.end(), name);
    if (it == kChannelNames.end()) throw std::invalid_argument("unknown channel '" + std::string(name) + "'");
    return static_cast<Channel>(it - kChannelNames.begin());
}

std::vector<double> TimeSeriesRecord::channel(Channel c) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const Row& r : rows) out.push_back(r[static_cast<std::size_t>(c)]);
    return out;
}

InitialState initialize(const Scenario& scenario) {
    scenario.validate();
    // The washout does not move the equilibrium, so a slower one is used to
    // damp the swing mode while settling.
    Scenario pre = scenario;
    pre.control.sync.tau_lpf = std::max(scenario.control.sync.tau_lpf, kPrerollWashout);
    Simulation sim(pre);
    const std::int64_t n_pre = step_index(scenario.preroll, scenario.dt);
    double spread = 0.0;
    if (n_pre > 0 && scenario.plant.grid.connected) {
        sim.rewind_grid(static_cast<double>(n_pre) * scenario.dt);
        sim.align_controller_angle();
        const std::int64_t ramp_steps = std::max<std::int64_t>(1, n_pre / 2);
        const std::int64_t window = std::min<std::int64_t>(n_pre / 2, step_index(0.1, scenario.dt));
        double p_min = std::numeric_limits<double>::infinity();
        double p_max = -p_min;
        for (std::int64_t k = -n_pre; k < 0; ++k) {
            Setpoints sp = scenario.initial;
            const double progress = std::min(1.0, static_cast<double>(k + n_pre) / static_cast<double>(ramp_steps));
            sp.p_ref = progress * scenario.initial.p_ref;
            ControllerOutput out;
            try {
                out = sim.step(k, sp);
            } catch (const NonFiniteState& e) {
                throw InitializationError(std::string("pre-roll diverged: ") + e.what());
            }
            if (k >= -window) {
                p_min = std::min(p_min, out.power.p_ac);
                p_max = std::max(p_max, out.power.p_ac);
            }
        }
        spread = p_max - p_min;
        if (!(spread < 0.005)) {
            std::ostringstream msg;
            msg << "pre-roll of " << scenario.preroll << " s did not settle: P_ac spread " << spread
                << " p.u. over the last 100 ms (limit 0.005), P_ac range [" << p_min << ", " << p_max << "]";
            throw InitializationError(msg.str());
        }
    }
    return {sim.controller(), sim.state(), sim.grid(), spread};
}

RunResult run(const Scenario& scenario) {
    const InitialState init = initialize(scenario);
    Simulation sim(scenario, init);
    sim.prepare_events();

    RunResult result;
    result.scenario = scenario.name;
    result.record.interval = scenario.record_interval;
    const std::int64_t n_steps = step_index(scenario.duration, scenario.dt);
    const std::int64_t decimation =
        std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(scenario.record_interval / scenario.dt)));
    result.record.interval = static_cast<double>(decimation) * scenario.dt;
    result.record.rows.reserve(static_cast<std::size_t>(n_steps / decimation + 1));
    const double f_nominal = scenario.control.sync.omega_base / kTwoPi;
    double block_peak = 0.0;

    for (std::int64_t k = 0; k < n_steps; ++k) {
        const double t = static_cast<double>(k) * scenario.dt;
        sim.apply_events(k);
        const double f_grid = sim.grid().frequency();
        ControllerOutput out;
        try {
            out = sim.step(k, sim.setpoints());
        } catch (const NonFiniteState& e) {
            result.diverged = true;
            result.divergence_time = t;
            result.diagnostic = e.what();
            break;
        }
        ++result.steps;
        const PlantState& s = sim.state_before();
        const double f_s = out.omega * f_nominal;
        const double ref_peak = worst_phase_peak(out.i_limited);
        result.max_reference_peak = std::max(result.max_reference_peak, ref_peak);
        result.max_converter_current = std::max(result.max_converter_current, max_abs(s.i_m));
        block_peak = std::max(block_peak, max_abs(s.i_m));

        if (k % decimation == 0) {
            TimeSeriesRecord::Row row{};
            auto set = [&row](Channel c, double v) { row[static_cast<std::size_t>(c)] = v; };
            set(Channel::t, t);
            set(Channel::vs_a, s.v_s.a);
            set(Channel::vs_b, s.v_s.b);
            set(Channel::vs_c, s.v_s.c);
            set(Channel::is_a, s.i_t.a);
            set(Channel::is_b, s.i_t.b);
            set(Channel::is_c, s.i_t.c);
            set(Channel::im_a, s.i_m.a);
            set(Channel::im_b, s.i_m.b);
            set(Channel::im_c, s.i_m.c);
            set(Channel::vg_a, s.v_g.a);
            set(Channel::vg_b, s.v_g.b);
            set(Channel::vg_c, s.v_g.c);
            set(Channel::ig_a, -s.i_g.a);
            set(Channel::ig_b, -s.i_g.b);
            set(Channel::ig_c, -s.i_g.c);
            set(Channel::f_s, f_s);
            set(Channel::f_grid, f_grid);
            set(Channel::p_ac, out.power.p_ac);
            set(Channel::q_ac, out.power.q_ac);
            set(Channel::p_cs, out.power.p_cs);
            set(Channel::p_esc, out.power.p_esc);
            set(Channel::p_droop, out.power.p_droop);
            set(Channel::v_star, out.v_star);
            set(Channel::vs_pos, out.v_seq.positive_magnitude());
            set(Channel::vs_neg, out.v_seq.negative_magnitude());
            set(Channel::iref_peak, ref_peak);
            set(Channel::limiter_active, out.limiter_scale < 1.0 ? 1.0 : 0.0);
            set(Channel::im_peak, block_peak);
            block_peak = 0.0;
            result.record.rows.push_back(row);
        }

        if (std::abs(f_s - f_nominal) > kDivergenceFrequencyBand ||
            std::max(max_abs(s.i_m), max_abs(s.i_t)) > kDivergenceCurrent) {
            result.diverged = true;
            result.divergence_time = t;
            std::ostringstream msg;
            msg << "diverged at t = " << t << " s: f_s = " << f_s << " Hz, |i_m| = " << max_abs(s.i_m)
                << " p.u., |i_s| = " << max_abs(s.i_t) << " p.u.";
            result.diagnostic = msg.str();
            break;
        }
    }
    return result;
}

SettledSummary measure_settled(const TimeSeriesRecord& record, Channel channel, double t_begin, double t_end) {
    SettledSummary s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -s.min;
    double sum = 0.0;
    for (const auto& row : record.rows) {
        const double t = row[static_cast<std::size_t>(Channel::t)];
        if (t < t_begin - 1.0e-12 || t > t_end + 1.0e-12) continue;
        const double v = row[static_cast<std::size_t>(channel)];
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        sum += v;
        ++s.count;
    }
    if (s.count == 0) throw std::invalid_argument("measurement window contains no samples");
    s.mean = sum / static_cast<double>(s.count);
    return s;
}

std::uint64_t record_hash(const TimeSeriesRecord& record) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& row : record.rows) {
        for (const double v : row) {
            unsigned char bytes[sizeof(double)];
            std::memcpy(bytes, &v, sizeof(double));
            for (const unsigned char b : bytes) {
                h ^= b;
                h *= 1099511628211ULL;
            }
        }
    }
    return h;
}

}  // namespace gfm

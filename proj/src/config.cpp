#include "gfm/config.hpp"

#include "gfm/presets.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <optional>

namespace gfm {

ConfigError::ConfigError(const std::string& message, int line, std::string key)
    : std::runtime_error(line > 0 ? fmt::format("line {}: {}", line, message) : message),
      line_(line),
      key_(std::move(key)) {}

namespace {

enum class Range { any, positive, non_negative, unit_abs };

int line_of(const YAML::Node& node) { return node.Mark().line >= 0 ? node.Mark().line + 1 : 0; }

std::string join(std::string_view path, std::string_view key) {
    return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

// A mapping whose keys are consumed one by one; anything left over is unknown.
class Section {
public:
    Section(const YAML::Node& node, std::string path, int parent_line) : node_(node), path_(std::move(path)) {
        if (!node_.IsMap() && !node_.IsNull()) {
            throw ConfigError(fmt::format("'{}' must be a mapping", path_.empty() ? "document" : path_),
                              node_.IsDefined() ? line_of(node_) : parent_line, path_);
        }
    }

    void reject_unknown(std::initializer_list<std::string_view> allowed) const {
        for (const auto& kv : node_) {
            const std::string key = kv.first.as<std::string>();
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                throw ConfigError(fmt::format("unknown key '{}'", join(path_, key)), line_of(kv.first),
                                  join(path_, key));
            }
        }
    }

    [[nodiscard]] YAML::Node get(std::string_view key) const { return node_[std::string(key)]; }
    [[nodiscard]] bool has(std::string_view key) const { return static_cast<bool>(node_[std::string(key)]); }
    [[nodiscard]] const std::string& path() const { return path_; }
    [[nodiscard]] int line() const { return line_of(node_); }

    void number(std::string_view key, double& dst, Range range) const {
        const YAML::Node v = get(key);
        if (!v) return;
        const std::string name = join(path_, key);
        double x = 0.0;
        try {
            if (!v.IsScalar()) throw YAML::BadConversion(v.Mark());
            x = v.as<double>();
        } catch (const YAML::BadConversion&) {
            throw ConfigError(fmt::format("'{}' must be a number", name), line_of(v), name);
        }
        if (!std::isfinite(x)) throw ConfigError(fmt::format("'{}' must be finite", name), line_of(v), name);
        const char* problem = nullptr;
        switch (range) {
            case Range::any: break;
            case Range::positive: if (!(x > 0.0)) problem = "must be > 0"; break;
            case Range::non_negative: if (!(x >= 0.0)) problem = "must be >= 0"; break;
            case Range::unit_abs: if (!(std::abs(x) <= 1.0)) problem = "must lie in [-1, 1]"; break;
        }
        if (problem) throw ConfigError(fmt::format("'{}' = {} {}", name, x, problem), line_of(v), name);
        dst = x;
    }

    void optional_number(std::string_view key, std::optional<double>& dst, Range range) const {
        if (!has(key)) return;
        double x = 0.0;
        number(key, x, range);
        dst = x;
    }

    void boolean(std::string_view key, bool& dst) const {
        const YAML::Node v = get(key);
        if (!v) return;
        try {
            if (!v.IsScalar()) throw YAML::BadConversion(v.Mark());
            dst = v.as<bool>();
        } catch (const YAML::BadConversion&) {
            throw ConfigError(fmt::format("'{}' must be true or false", join(path_, key)), line_of(v),
                              join(path_, key));
        }
    }

    [[nodiscard]] std::optional<std::string> text(std::string_view key) const {
        const YAML::Node v = get(key);
        if (!v) return std::nullopt;
        if (!v.IsScalar()) {
            throw ConfigError(fmt::format("'{}' must be a string", join(path_, key)), line_of(v), join(path_, key));
        }
        return v.as<std::string>();
    }

    // Converts a string value, mapping std::invalid_argument to a located error.
    template <class T, class F>
    void enumerated(std::string_view key, T& dst, F&& convert) const {
        const auto s = text(key);
        if (!s) return;
        try {
            dst = convert(*s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), line_of(get(key)), join(path_, key));
        }
    }

    template <class F>
    void list(std::string_view key, F&& each) const {
        const YAML::Node v = get(key);
        if (!v) return;
        const std::string name = join(path_, key);
        if (!v.IsSequence()) throw ConfigError(fmt::format("'{}' must be a list", name), line_of(v), name);
        for (std::size_t i = 0; i < v.size(); ++i) {
            each(Section(v[i], fmt::format("{}[{}]", name, i), line_of(v)));
        }
    }

private:
    YAML::Node node_;
    std::string path_;
};

void read_control(const Section& c, ControllerParams& p) {
    c.reject_unknown({"h", "k_d", "tau_lpf", "k_droop", "omega_ref", "k_q", "tau_v", "tau_q", "setpoint_rate",
                      "v_min", "v_max", "r_vp", "x_vp", "r_vn", "x_vn", "i_lim", "kp", "ki", "kr", "l_dec",
                      "v_mod_max", "ddsrf_cutoff", "v_floor"});
    c.number("h", p.sync.h, Range::positive);
    c.number("k_d", p.sync.k_d, Range::non_negative);
    c.number("tau_lpf", p.sync.tau_lpf, Range::positive);
    c.number("k_droop", p.sync.k_droop, Range::positive);
    c.number("omega_ref", p.sync.omega_ref, Range::positive);
    c.number("k_q", p.avr.k_q, Range::non_negative);
    c.number("tau_v", p.avr.tau_v, Range::positive);
    c.number("tau_q", p.avr.tau_q, Range::positive);
    c.number("setpoint_rate", p.avr.setpoint_rate, Range::positive);
    c.number("v_min", p.avr.v_min, Range::non_negative);
    c.number("v_max", p.avr.v_max, Range::positive);
    c.number("r_vp", p.impedance.r_vp, Range::any);
    c.number("x_vp", p.impedance.x_vp, Range::any);
    c.number("r_vn", p.impedance.r_vn, Range::any);
    c.number("x_vn", p.impedance.x_vn, Range::any);
    c.number("i_lim", p.limiter.i_lim, Range::positive);
    c.number("kp", p.current.kp, Range::positive);
    c.number("ki", p.current.ki, Range::non_negative);
    c.number("kr", p.current.kr, Range::non_negative);
    c.number("l_dec", p.current.l_f, Range::non_negative);
    c.number("v_mod_max", p.current.v_max, Range::positive);
    c.number("ddsrf_cutoff", p.ddsrf_cutoff, Range::positive);
    c.number("v_floor", p.v_floor, Range::positive);
}

void read_plant(const Section& s, PlantParams& p) {
    s.reject_unknown({"s_base", "l_f", "r_f", "c_f", "r_c", "x_tr", "r_tr", "grid"});
    s.number("s_base", p.s_base, Range::positive);
    s.number("l_f", p.l_f, Range::positive);
    s.number("r_f", p.r_f, Range::non_negative);
    s.number("c_f", p.c_f, Range::positive);
    s.number("r_c", p.r_c, Range::non_negative);
    s.number("x_tr", p.x_tr, Range::positive);
    s.number("r_tr", p.r_tr, Range::non_negative);
    if (s.has("grid")) {
        const Section g(s.get("grid"), join(s.path(), "grid"), s.line());
        g.reject_unknown({"scl", "x_r_ratio", "magnitude", "phase", "frequency", "connected"});
        g.number("scl", p.grid.scl, Range::positive);
        g.number("x_r_ratio", p.grid.x_r_ratio, Range::positive);
        g.number("magnitude", p.grid.magnitude, Range::non_negative);
        g.number("phase", p.grid.phase, Range::any);
        g.number("frequency", p.grid.frequency, Range::positive);
        g.boolean("connected", p.grid.connected);
    }
}

Event read_event(const Section& e) {
    Event ev;
    e.number("time", ev.time, Range::non_negative);
    const auto type = e.text("type");
    if (!type) throw ConfigError(fmt::format("'{}' needs a type", e.path()), e.line(), e.path());
    if (*type == "setpoint") {
        e.reject_unknown({"time", "type", "p_ref", "q_ref"});
        SetpointStep s;
        e.optional_number("p_ref", s.p_ref, Range::unit_abs);
        e.optional_number("q_ref", s.q_ref, Range::any);
        ev.action = s;
    } else if (*type == "breaker") {
        e.reject_unknown({"time", "type", "close"});
        BreakerOperation b;
        e.boolean("close", b.close);
        ev.action = b;
    } else if (*type == "phase_jump") {
        e.reject_unknown({"time", "type", "degrees"});
        PhaseJump j;
        e.number("degrees", j.degrees, Range::any);
        ev.action = j;
    } else if (*type == "frequency_ramp") {
        e.reject_unknown({"time", "type", "rate", "duration"});
        FrequencyRamp r;
        e.number("rate", r.rate, Range::any);
        e.number("duration", r.duration, Range::positive);
        ev.action = r;
    } else if (*type == "voltage_ramp") {
        e.reject_unknown({"time", "type", "target"});
        VoltageRamp v;
        e.number("target", v.target, Range::non_negative);
        ev.action = v;
    } else {
        throw ConfigError(fmt::format("unknown event type '{}' (expected setpoint, breaker, phase_jump, "
                                      "frequency_ramp or voltage_ramp)", *type),
                          line_of(e.get("type")), join(e.path(), "type"));
    }
    return ev;
}

FaultSpec read_fault(const Section& f) {
    f.reject_unknown({"kind", "resistance", "start", "end", "bus"});
    FaultSpec spec;
    f.enumerated("kind", spec.kind, [](const std::string& s) { return fault_kind_from_string(s); });
    f.number("resistance", spec.resistance, Range::positive);
    f.number("start", spec.start, Range::non_negative);
    f.number("end", spec.end, Range::non_negative);
    f.enumerated("bus", spec.bus, [](const std::string& s) { return bus_from_string(s); });
    return spec;
}

LoadSpec read_load(const Section& l) {
    l.reject_unknown({"power", "bus", "connect", "disconnect"});
    LoadSpec spec;
    l.number("power", spec.power, Range::positive);
    l.enumerated("bus", spec.bus, [](const std::string& s) { return bus_from_string(s); });
    l.number("connect", spec.connect, Range::non_negative);
    l.number("disconnect", spec.disconnect, Range::non_negative);
    return spec;
}

std::string num(double x) { return fmt::format("{}", x); }

void emit_number(YAML::Emitter& out, std::string_view key, double x) {
    out << YAML::Key << std::string(key) << YAML::Value << num(x);
}

}  // namespace

Scenario parse_config(std::string_view text) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        throw ConfigError(fmt::format("malformed YAML: {}", e.msg), e.mark.line >= 0 ? e.mark.line + 1 : 0, "");
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    const Section top(root, "", 1);
    top.reject_unknown({"name", "preset", "mode", "duration", "dt", "record_interval", "preroll", "expect_divergence",
                        "control", "plant", "initial", "events", "faults", "loads"});

    Scenario s;
    if (const auto base = top.text("preset")) {
        try {
            s = preset(*base);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), line_of(top.get("preset")), "preset");
        }
    }
    if (const auto name = top.text("name")) s.name = *name;
    top.enumerated("mode", s.control.mode, [](const std::string& m) { return control_mode_from_string(m); });
    top.number("duration", s.duration, Range::positive);
    top.number("dt", s.dt, Range::positive);
    top.number("record_interval", s.record_interval, Range::positive);
    top.number("preroll", s.preroll, Range::non_negative);
    top.boolean("expect_divergence", s.expect_divergence);
    if (top.has("control")) read_control(Section(top.get("control"), "control", 1), s.control);
    if (top.has("plant")) read_plant(Section(top.get("plant"), "plant", 1), s.plant);
    if (top.has("initial")) {
        const Section i(top.get("initial"), "initial", 1);
        i.reject_unknown({"p_ref", "q_ref", "v_set"});
        i.number("p_ref", s.initial.p_ref, Range::unit_abs);
        i.number("q_ref", s.initial.q_ref, Range::any);
        i.number("v_set", s.initial.v_set, Range::non_negative);
    }
    if (top.has("events")) {
        s.events.clear();
        top.list("events", [&](const Section& e) { s.events.push_back(read_event(e)); });
    }
    if (top.has("faults")) {
        s.faults.clear();
        top.list("faults", [&](const Section& f) { s.faults.push_back(read_fault(f)); });
    }
    if (top.has("loads")) {
        s.loads.clear();
        top.list("loads", [&](const Section& l) { s.loads.push_back(read_load(l)); });
    }

    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what(), 0, "");
    }
    return s;
}

std::string serialize_config(const Scenario& s) {
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "mode" << YAML::Value << std::string(to_string(s.control.mode));
    emit_number(out, "duration", s.duration);
    emit_number(out, "dt", s.dt);
    emit_number(out, "record_interval", s.record_interval);
    emit_number(out, "preroll", s.preroll);
    out << YAML::Key << "expect_divergence" << YAML::Value << s.expect_divergence;

    const ControllerParams& c = s.control;
    out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
    emit_number(out, "h", c.sync.h);
    emit_number(out, "k_d", c.sync.k_d);
    emit_number(out, "tau_lpf", c.sync.tau_lpf);
    emit_number(out, "k_droop", c.sync.k_droop);
    emit_number(out, "omega_ref", c.sync.omega_ref);
    emit_number(out, "k_q", c.avr.k_q);
    emit_number(out, "tau_v", c.avr.tau_v);
    emit_number(out, "tau_q", c.avr.tau_q);
    emit_number(out, "setpoint_rate", c.avr.setpoint_rate);
    emit_number(out, "v_min", c.avr.v_min);
    emit_number(out, "v_max", c.avr.v_max);
    emit_number(out, "r_vp", c.impedance.r_vp);
    emit_number(out, "x_vp", c.impedance.x_vp);
    emit_number(out, "r_vn", c.impedance.r_vn);
    emit_number(out, "x_vn", c.impedance.x_vn);
    emit_number(out, "i_lim", c.limiter.i_lim);
    emit_number(out, "kp", c.current.kp);
    emit_number(out, "ki", c.current.ki);
    emit_number(out, "kr", c.current.kr);
    emit_number(out, "l_dec", c.current.l_f);
    emit_number(out, "v_mod_max", c.current.v_max);
    emit_number(out, "ddsrf_cutoff", c.ddsrf_cutoff);
    emit_number(out, "v_floor", c.v_floor);
    out << YAML::EndMap;

    const PlantParams& p = s.plant;
    out << YAML::Key << "plant" << YAML::Value << YAML::BeginMap;
    emit_number(out, "s_base", p.s_base);
    emit_number(out, "l_f", p.l_f);
    emit_number(out, "r_f", p.r_f);
    emit_number(out, "c_f", p.c_f);
    emit_number(out, "r_c", p.r_c);
    emit_number(out, "x_tr", p.x_tr);
    emit_number(out, "r_tr", p.r_tr);
    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    emit_number(out, "scl", p.grid.scl);
    emit_number(out, "x_r_ratio", p.grid.x_r_ratio);
    emit_number(out, "magnitude", p.grid.magnitude);
    emit_number(out, "phase", p.grid.phase);
    emit_number(out, "frequency", p.grid.frequency);
    out << YAML::Key << "connected" << YAML::Value << p.grid.connected;
    out << YAML::EndMap << YAML::EndMap;

    out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
    emit_number(out, "p_ref", s.initial.p_ref);
    emit_number(out, "q_ref", s.initial.q_ref);
    emit_number(out, "v_set", s.initial.v_set);
    out << YAML::EndMap;

    struct EventFields {
        YAML::Emitter& out;
        void operator()(const SetpointStep& e) const {
            if (e.p_ref) emit_number(out, "p_ref", *e.p_ref);
            if (e.q_ref) emit_number(out, "q_ref", *e.q_ref);
        }
        void operator()(const BreakerOperation& e) const { out << YAML::Key << "close" << YAML::Value << e.close; }
        void operator()(const PhaseJump& e) const { emit_number(out, "degrees", e.degrees); }
        void operator()(const FrequencyRamp& e) const {
            emit_number(out, "rate", e.rate);
            emit_number(out, "duration", e.duration);
        }
        void operator()(const VoltageRamp& e) const { emit_number(out, "target", e.target); }
    };
    out << YAML::Key << "events" << YAML::Value << YAML::BeginSeq;
    for (const Event& e : s.events) {
        out << YAML::BeginMap;
        emit_number(out, "time", e.time);
        out << YAML::Key << "type" << YAML::Value << std::string(event_type_name(e.action));
        std::visit(EventFields{out}, e.action);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "faults" << YAML::Value << YAML::BeginSeq;
    for (const FaultSpec& f : s.faults) {
        out << YAML::BeginMap;
        out << YAML::Key << "kind" << YAML::Value << std::string(to_string(f.kind));
        emit_number(out, "resistance", f.resistance);
        emit_number(out, "start", f.start);
        emit_number(out, "end", f.end);
        out << YAML::Key << "bus" << YAML::Value << std::string(to_string(f.bus));
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;

    out << YAML::Key << "loads" << YAML::Value << YAML::BeginSeq;
    for (const LoadSpec& l : s.loads) {
        out << YAML::BeginMap;
        emit_number(out, "power", l.power);
        out << YAML::Key << "bus" << YAML::Value << std::string(to_string(l.bus));
        emit_number(out, "connect", l.connect);
        emit_number(out, "disconnect", l.disconnect);
        out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace gfm

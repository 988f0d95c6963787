#pragma once

#include "gfm/controller.hpp"
#include "gfm/plant.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace gfm {

struct SetpointStep {
    std::optional<double> p_ref;
    std::optional<double> q_ref;
    friend bool operator==(const SetpointStep&, const SetpointStep&) = default;
};

struct BreakerOperation {
    bool close{false};
    friend bool operator==(const BreakerOperation&, const BreakerOperation&) = default;
};

struct PhaseJump {
    double degrees{0.0};
    friend bool operator==(const PhaseJump&, const PhaseJump&) = default;
};

// Linear grid frequency slew for a limited duration.
struct FrequencyRamp {
    double rate{0.0};      // [Hz/s]
    double duration{0.0};  // [s]
    friend bool operator==(const FrequencyRamp&, const FrequencyRamp&) = default;
};

// New voltage setpoint, approached at the AVR setpoint rate limit.
struct VoltageRamp {
    double target{1.0};
    friend bool operator==(const VoltageRamp&, const VoltageRamp&) = default;
};

using EventAction = std::variant<SetpointStep, BreakerOperation, PhaseJump, FrequencyRamp, VoltageRamp>;

struct Event {
    double time{0.0};
    EventAction action;
    friend bool operator==(const Event&, const Event&) = default;
};

std::string_view event_type_name(const EventAction& action);

struct Scenario {
    std::string name{"scenario"};
    double duration{1.0};
    double dt{20.0e-6};
    double record_interval{1.0e-3};
    double preroll{3.0};  // settling time before t = 0, skipped when zero
    ControllerParams control{ControllerParams::defaults()};
    PlantParams plant;
    Setpoints initial;
    std::vector<Event> events;
    std::vector<FaultSpec> faults;
    std::vector<LoadSpec> loads;
    bool expect_divergence{false};

    void validate() const;
};

enum class Channel : std::size_t {
    t,
    vs_a, vs_b, vs_c,
    is_a, is_b, is_c,
    im_a, im_b, im_c,
    vg_a, vg_b, vg_c,
    ig_a, ig_b, ig_c,
    f_s, f_grid,
    p_ac, q_ac, p_cs, p_esc, p_droop,
    v_star, vs_pos, vs_neg,
    iref_peak, limiter_active, im_peak,
    count_
};

inline constexpr std::size_t kChannelCount = static_cast<std::size_t>(Channel::count_);

struct TimeSeriesRecord {
    using Row = std::array<double, kChannelCount>;

    double interval{1.0e-3};
    std::vector<Row> rows;

    static const std::array<std::string_view, kChannelCount>& channel_names();
    static Channel channel_from_name(std::string_view name);

    [[nodiscard]] bool empty() const { return rows.empty(); }
    [[nodiscard]] std::size_t size() const { return rows.size(); }
    [[nodiscard]] double at(std::size_t row, Channel c) const { return rows[row][static_cast<std::size_t>(c)]; }
    [[nodiscard]] std::vector<double> channel(Channel c) const;
};

struct RunResult {
    std::string scenario;
    TimeSeriesRecord record;
    bool diverged{false};
    double divergence_time{0.0};
    std::string diagnostic;
    // Maxima over every simulation step after t = 0, not just recorded samples.
    double max_reference_peak{0.0};
    double max_converter_current{0.0};
    std::uint64_t steps{0};
};

struct InitialState {
    ControllerState controller;
    PlantState plant;
    GridSource grid;
    double settle_deviation{0.0};  // P_ac spread over the last 100 ms of pre-roll
};

class InitializationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operating point at t = 0. Grid-connected scenarios are settled by a pre-roll
// from zero state with P* ramped in and a slower washout; islanded starts are
// all zero.
InitialState initialize(const Scenario& scenario);

// Fixed-step lock-step simulation. Divergence truncates the record and is
// reported in the result rather than thrown.
RunResult run(const Scenario& scenario);

struct SettledSummary {
    double mean{0.0};
    double min{0.0};
    double max{0.0};
    std::size_t count{0};
};

// Statistics of a channel over [t_begin, t_end].
SettledSummary measure_settled(const TimeSeriesRecord& record, Channel channel, double t_begin, double t_end);

// FNV-1a over the raw sample bytes.
std::uint64_t record_hash(const TimeSeriesRecord& record);

// Divergence thresholds.
inline constexpr double kDivergenceFrequencyBand = 25.0;  // [Hz] around nominal
inline constexpr double kDivergenceCurrent = 10.0;        // [p.u.]

}  // namespace gfm

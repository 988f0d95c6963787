#pragma once

#include "gfm/engine.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gfm {

inline constexpr double kCurrentCap = 1.1 * 1.05;  // per-phase peak bound [p.u.]
inline constexpr double kInceptionExclusion = 2.0e-3;  // [s] after each fault inception or phase jump

struct Check {
    std::string metric;
    double value{0.0};  // NaN when the quantity never occurred (e.g. no band exit)
    std::string requirement;
    bool pass{false};
};

struct ScenarioReport {
    std::string scenario;
    bool expect_divergence{false};
    bool diverged{false};
    double divergence_time{0.0};
    std::string diagnostic;
    std::string error;  // set when the run could not be carried out
    double wall_time{0.0};
    std::vector<Check> checks;

    [[nodiscard]] bool pass() const;
    [[nodiscard]] const Check* find(std::string_view metric) const;
};

// Steady state of an islanded unit feeding resistive loads: the ESC settles at
// zero virtual power, the current source carries the droop power and the AVR
// closes on the converter reactive power.
struct IslandedOperatingPoint {
    double omega{1.0};        // [p.u.]
    double v_converter{0.0};  // capacitor node magnitude
    double v_grid{0.0};       // grid bus magnitude
    double v_star{0.0};
    double p_ac{0.0};
    double q_ac{0.0};
};

// Newton solve on the phasor network at the settled frequency.
IslandedOperatingPoint islanded_operating_point(const Scenario& scenario, double load_converter, double load_grid);

// Instantaneous space-vector magnitude of three recorded phase channels.
std::vector<double> space_vector_magnitude(const TimeSeriesRecord& record, Channel a);

// Acceptance checks for a built-in scenario (identified by name); other scenarios
// only get the divergence and synchronization checks.
ScenarioReport evaluate(const Scenario& scenario, const RunResult& result);

struct SuiteOptions {
    std::filesystem::path out_dir{"out"};
    std::optional<double> dt;
    std::optional<ControlMode> mode;
    unsigned jobs{1};
    bool plots{false};
    std::vector<std::string> scenarios;  // empty: every preset
};

struct SuiteReport {
    std::vector<ScenarioReport> scenarios;

    [[nodiscard]] bool pass() const;
};

// Runs the scenarios on up to options.jobs threads, writes <name>.csv per
// scenario (and plot scripts if requested) plus summary.json into out_dir.
SuiteReport run_suite(const SuiteOptions& options);

// Single scenario through the same path as the suite.
ScenarioReport run_and_report(const Scenario& scenario, const std::filesystem::path& out_dir, bool plots);

std::string summary_json(const SuiteReport& report);

}  // namespace gfm

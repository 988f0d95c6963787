#include "gfm/config.hpp"
#include "gfm/presets.hpp"
#include "gfm/suite.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace {

gfm::Scenario load_scenario(const std::string& target) {
    const auto names = gfm::preset_names();
    if (std::find(names.begin(), names.end(), target) != names.end()) return gfm::preset(target);
    std::ifstream in(target);
    if (!in) throw std::runtime_error(fmt::format("'{}' is neither a preset nor a readable file", target));
    std::ostringstream text;
    text << in.rdbuf();
    try {
        return gfm::parse_config(text.str());
    } catch (const gfm::ConfigError& e) {
        throw std::runtime_error(fmt::format("{}: {}", target, e.what()));
    }
}

void print_report(const gfm::ScenarioReport& r) {
    fmt::print("{:<6} {}  ({:.1f} s)\n", r.scenario, r.pass() ? "PASS" : "FAIL", r.wall_time);
    if (!r.error.empty()) fmt::print("       error: {}\n", r.error);
    if (r.diverged) fmt::print("       {}\n", r.diagnostic);
    for (const gfm::Check& c : r.checks) {
        fmt::print("       {} {:<36} {:>12.6g}  {}\n", c.pass ? "ok  " : "FAIL", c.metric, c.value, c.requirement);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grid-forming converter scenario simulator"};
    app.require_subcommand(1);

    std::string out_dir = "out";
    std::optional<double> dt;
    std::optional<std::string> mode;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool plots = false;

    const auto common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
        cmd->add_option("--dt", dt, "Simulation step [s]")->check(CLI::PositiveNumber);
        cmd->add_option("--mode", mode, "Synchronization mode")->check(CLI::IsMember({"esc", "vsm"}));
        cmd->add_flag("--plots", plots, "Write matplotlib plot scripts next to the CSVs");
    };

    std::string target;
    CLI::App* run_cmd = app.add_subcommand("run", "Run one scenario from a preset name or a YAML config");
    run_cmd->add_option("target", target, "Preset name or config file")->required();
    common(run_cmd);

    std::vector<std::string> only;
    CLI::App* suite_cmd = app.add_subcommand("suite", "Run the built-in scenarios and write summary.json");
    suite_cmd->add_option("--jobs", jobs, "Concurrent scenarios")->check(CLI::PositiveNumber)->capture_default_str();
    suite_cmd->add_option("--only", only, "Subset of presets");
    common(suite_cmd);

    std::string show_target;
    CLI::App* show_cmd = app.add_subcommand("show", "Print the full YAML config of a preset or config file");
    show_cmd->add_option("target", show_target, "Preset name or config file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const std::optional<gfm::ControlMode> control_mode =
            mode ? std::optional(gfm::control_mode_from_string(*mode)) : std::nullopt;

        if (*show_cmd) {
            fmt::print("{}", gfm::serialize_config(load_scenario(show_target)));
            return 0;
        }

        if (*run_cmd) {
            gfm::Scenario s = load_scenario(target);
            if (dt) s.dt = *dt;
            if (control_mode) s.control.mode = *control_mode;
            const gfm::ScenarioReport r = gfm::run_and_report(s, out_dir, plots);
            print_report(r);
            if (!r.error.empty()) return 2;
            return r.pass() ? 0 : 1;
        }

        gfm::SuiteOptions options;
        options.out_dir = out_dir;
        options.dt = dt;
        options.mode = control_mode;
        options.jobs = jobs;
        options.plots = plots;
        options.scenarios = only;
        const gfm::SuiteReport report = gfm::run_suite(options);
        for (const auto& r : report.scenarios) print_report(r);
        fmt::print("\n{} ({})\n", report.pass() ? "ALL PASS" : "FAILURES", (std::filesystem::path(out_dir) / "summary.json").string());
        return report.pass() ? 0 : 1;
    } catch (const std::exception& e) {
        fmt::print(stderr, "gfmsim: {}\n", e.what());
        return 2;
    }
}

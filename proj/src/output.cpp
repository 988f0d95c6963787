#include "gfm/output.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace gfm {

void write_csv(const TimeSeriesRecord& record, std::ostream& out) {
    const auto& names = TimeSeriesRecord::channel_names();
    std::string line;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) line += ',';
        line += names[i];
    }
    line += '\n';
    out << line;
    fmt::memory_buffer buf;
    for (const auto& row : record.rows) {
        buf.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) buf.push_back(',');
            fmt::format_to(std::back_inserter(buf), "{}", row[i]);
        }
        buf.push_back('\n');
        out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
}

void write_csv(const TimeSeriesRecord& record, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_csv(record, out);
    if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

TimeSeriesRecord read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::string line;
    std::getline(in, line);
    std::string expected;
    for (const auto name : TimeSeriesRecord::channel_names()) {
        if (!expected.empty()) expected += ',';
        expected += name;
    }
    if (line != expected) throw std::runtime_error("'" + path.string() + "': unexpected CSV header");

    TimeSeriesRecord record;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TimeSeriesRecord::Row row{};
        const char* p = line.data();
        const char* end = line.data() + line.size();
        for (std::size_t i = 0; i < row.size(); ++i) {
            const auto [next, ec] = std::from_chars(p, end, row[i]);
            const bool last = i + 1 == row.size();
            if (ec != std::errc() || (last ? next != end : (next == end || *next != ','))) {
                throw std::runtime_error(fmt::format("'{}' line {}: malformed row", path.string(), line_no));
            }
            p = next + (last ? 0 : 1);
        }
        record.rows.push_back(row);
    }
    if (record.rows.size() > 1) {
        record.interval = record.rows[1][0] - record.rows[0][0];
    }
    return record;
}

PlotLayout plot_layout_for(std::string_view scenario) {
    if (scenario == "s0") return PlotLayout::currents_frequency;
    if (scenario == "s1") return PlotLayout::powers;
    if (scenario == "s2" || scenario == "s4") return PlotLayout::voltages_currents;
    if (scenario == "s3") return PlotLayout::powers_frequency;
    if (scenario.starts_with("s5")) return PlotLayout::currents_frequency_powers;
    return PlotLayout::powers_frequency;
}

namespace {

struct Panel {
    std::string ylabel;
    std::vector<std::string> channels;
};

std::vector<Panel> panels_for(PlotLayout layout) {
    const Panel currents{"Converter current [p.u.]", {"im_a", "im_b", "im_c"}};
    const Panel voltages{"Grid voltage [p.u.]", {"vg_a", "vg_b", "vg_c"}};
    const Panel frequency{"Frequency [Hz]", {"f_s", "f_grid"}};
    const Panel powers{"Active power [p.u.]", {"p_ac", "p_cs", "p_esc"}};
    switch (layout) {
        case PlotLayout::currents_frequency: return {currents, frequency};
        case PlotLayout::powers: return {powers};
        case PlotLayout::voltages_currents: return {voltages, currents};
        case PlotLayout::powers_frequency: return {powers, frequency};
        case PlotLayout::currents_frequency_powers: return {currents, frequency, powers};
    }
    return {powers};
}

std::string python_list(const std::vector<std::string>& items) {
    std::string s = "[";
    for (std::size_t i = 0; i < items.size(); ++i) s += fmt::format("{}\"{}\"", i ? ", " : "", items[i]);
    return s + "]";
}

}  // namespace

std::filesystem::path emit_plot(const TimeSeriesRecord& record, std::string_view scenario,
                                const std::filesystem::path& csv_path, const std::filesystem::path& dir) {
    if (record.empty()) throw std::invalid_argument("cannot plot an empty record");
    const std::vector<Panel> panels = panels_for(plot_layout_for(scenario));

    std::ostringstream py;
    fmt::print(py,
               "import csv\n"
               "import os\n"
               "\n"
               "import matplotlib\n"
               "\n"
               "matplotlib.use(\"Agg\")\n"
               "import matplotlib.pyplot as plt\n"
               "\n"
               "HERE = os.path.dirname(os.path.abspath(__file__))\n"
               "CSV = os.path.join(HERE, r\"{}\")\n"
               "PANELS = [\n",
               std::filesystem::proximate(csv_path, dir).generic_string());
    for (const Panel& p : panels) fmt::print(py, "    (\"{}\", {}),\n", p.ylabel, python_list(p.channels));
    fmt::print(py,
               "]\n"
               "\n"
               "with open(CSV, newline=\"\") as f:\n"
               "    rows = list(csv.DictReader(f))\n"
               "t = [float(r[\"t\"]) for r in rows]\n"
               "fig, axes = plt.subplots(len(PANELS), 1, sharex=True, squeeze=False, "
               "figsize=(8, 2.8 * len(PANELS)))\n"
               "for ax, (ylabel, channels) in zip(axes[:, 0], PANELS):\n"
               "    for name in channels:\n"
               "        ax.plot(t, [float(r[name]) for r in rows], label=name, linewidth=0.8)\n"
               "    ax.set_ylabel(ylabel)\n"
               "    ax.grid(True, alpha=0.3)\n"
               "    ax.legend(loc=\"upper right\", fontsize=\"small\")\n"
               "axes[-1, 0].set_xlabel(\"Time [s]\")\n"
               "fig.suptitle(\"{}\")\n"
               "fig.tight_layout()\n"
               "fig.savefig(os.path.join(HERE, \"plot_{}.png\"), dpi=150)\n",
               scenario, scenario);

    std::filesystem::create_directories(dir);
    const std::filesystem::path script = dir / fmt::format("plot_{}.py", scenario);
    std::ofstream out(script);
    if (!out) throw std::runtime_error("cannot open '" + script.string() + "' for writing");
    out << py.str();
    return script;
}

}  // namespace gfm

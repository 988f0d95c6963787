#pragma once

#include "gfm/engine.hpp"

#include <filesystem>
#include <ostream>
#include <string_view>

namespace gfm {

// One header row with the channel names, then one row per sample. Values use the
// shortest representation that parses back to the same double.
void write_csv(const TimeSeriesRecord& record, std::ostream& out);
void write_csv(const TimeSeriesRecord& record, const std::filesystem::path& path);

// Reads a file written by write_csv. Throws on a header mismatch or a short row.
TimeSeriesRecord read_csv(const std::filesystem::path& path);

enum class PlotLayout {
    currents_frequency,  // s0: converter currents / frequency
    powers,              // s1: P*, P_cs, P_ESC, P_ac
    voltages_currents,   // s2, s4: grid voltages / converter currents
    powers_frequency,    // s3: powers / frequency
    currents_frequency_powers,  // s5: currents / frequency / powers
};

PlotLayout plot_layout_for(std::string_view scenario);

// Writes <dir>/plot_<scenario>.py, a matplotlib script that reads csv_path and
// saves plot_<scenario>.png next to itself. Returns the script path. Throws
// std::invalid_argument on an empty record.
std::filesystem::path emit_plot(const TimeSeriesRecord& record, std::string_view scenario,
                                const std::filesystem::path& csv_path, const std::filesystem::path& dir);

}  // namespace gfm

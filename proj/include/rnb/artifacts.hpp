#pragma once

#include <string>
#include <vector>

namespace rnb {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

// Shortest round-trip decimal form.
std::string num(double v);

void write_table(const std::string& path, const Table& t, const std::string& header_comment = "");
// Skips comment lines starting with '#'.
Table read_table(const std::string& path);

// Plot-ready CSVs derived from a run directory: trajectory projections, constraint drift,
// and copies of gap and residual tables when present.
std::vector<std::string> emit_plots_data(const std::string& run_dir, const std::string& out_dir);

} // namespace rnb

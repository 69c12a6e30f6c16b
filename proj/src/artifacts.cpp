#include "rnb/artifacts.hpp"
#include "rnb/errors.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace rnb {

namespace fs = std::filesystem;

std::string num(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_table(const std::string& path, const Table& t, const std::string& header_comment)
{
    std::ofstream f(path);
    if (!f)
        throw Error(ErrorKind::MissingArtifact, "cannot write " + path);
    if (!header_comment.empty())
        f << "# " << header_comment << '\n';
    for (std::size_t k = 0; k < t.columns.size(); ++k)
        f << (k ? "," : "") << t.columns[k];
    f << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t k = 0; k < r.size(); ++k)
            f << (k ? "," : "") << r[k];
        f << '\n';
    }
}

Table read_table(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw Error(ErrorKind::MissingArtifact, "missing artifact " + path);
    Table t;
    std::string line;
    bool header = true;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (header) {
            t.columns = cells;
            header = false;
        } else {
            t.rows.push_back(cells);
        }
    }
    if (header)
        throw Error(ErrorKind::MissingArtifact, "empty artifact " + path);
    return t;
}

namespace {

std::string first_comment(const fs::path& p)
{
    std::ifstream f(p);
    std::string line;
    if (std::getline(f, line) && !line.empty() && line[0] == '#')
        return line.substr(line.find_first_not_of("# "));
    return "";
}

int column(const Table& t, const std::string& name)
{
    for (std::size_t k = 0; k < t.columns.size(); ++k)
        if (t.columns[k] == name)
            return static_cast<int>(k);
    throw Error(ErrorKind::MissingArtifact, "column '" + name + "' not found");
}

} // namespace

std::vector<std::string> emit_plots_data(const std::string& run_dir, const std::string& out_dir)
{
    if (!fs::is_directory(run_dir))
        throw Error(ErrorKind::MissingArtifact, "run directory " + run_dir + " does not exist");
    std::vector<fs::path> trajectories;
    for (const auto& e : fs::directory_iterator(run_dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("trajectory_", 0) == 0 && e.path().extension() == ".csv")
            trajectories.push_back(e.path());
    }
    std::sort(trajectories.begin(), trajectories.end());
    const fs::path diag = fs::path(run_dir) / "diagnostics.csv";
    const char* copies[] = {"gap_vs_sigma.csv", "pb_residuals.csv", "oracle_residuals.csv", "divergence.csv"};
    bool any = !trajectories.empty() || fs::exists(diag);
    for (const char* c : copies)
        any = any || fs::exists(fs::path(run_dir) / c);
    if (!any)
        throw Error(ErrorKind::MissingArtifact, "no run artifacts in " + run_dir);

    fs::create_directories(out_dir);
    std::vector<std::string> written;
    for (const auto& p : trajectories) {
        const Table t = read_table(p.string());
        const int ct = column(t, "t"), cx = column(t, "r1"), cy = column(t, "r2"), cz = column(t, "r3");
        Table out;
        out.columns = {"t", "x", "y", "z"};
        for (const auto& r : t.rows)
            out.add({r[ct], r[cx], r[cy], r[cz]});
        const std::string label = p.stem().string().substr(std::string("trajectory_").size());
        const fs::path dst = fs::path(out_dir) / ("projection_" + label + ".csv");
        write_table(dst.string(), out, first_comment(p));
        written.push_back(dst.string());
    }
    if (fs::exists(diag)) {
        const Table t = read_table(diag.string());
        const int ct = column(t, "t"), cc = column(t, "max_constraint");
        Table out;
        out.columns = {"t", "max_constraint"};
        for (const auto& r : t.rows)
            out.add({r[ct], r[cc]});
        const fs::path dst = fs::path(out_dir) / "constraint_drift.csv";
        write_table(dst.string(), out, first_comment(diag));
        written.push_back(dst.string());
    }
    for (const char* c : copies) {
        const fs::path src = fs::path(run_dir) / c;
        if (!fs::exists(src))
            continue;
        const fs::path dst = fs::path(out_dir) / c;
        fs::copy_file(src, dst, fs::copy_options::overwrite_existing);
        written.push_back(dst.string());
    }
    return written;
}

} // namespace rnb

#pragma once

// Critical-value tables: a self-describing text artifact holding simulated
// percentile surfaces, plus the lookups the switching test performs against
// them. Generation lives in table_gen.hpp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"

namespace qpr {

enum class TableKind { z_percentiles, dfgls_quantiles, alpha1_levels };

inline const char* table_kind_name(TableKind k) {
    switch (k) {
        case TableKind::z_percentiles: return "z_percentiles";
        case TableKind::dfgls_quantiles: return "dfgls_quantiles";
        case TableKind::alpha1_levels: return "alpha1_levels";
    }
    return "?";
}

inline TableKind table_kind_from(const std::string& s) {
    if (s == "z_percentiles") return TableKind::z_percentiles;
    if (s == "dfgls_quantiles") return TableKind::dfgls_quantiles;
    if (s == "alpha1_levels") return TableKind::alpha1_levels;
    throw TableError("unknown table kind '" + s + "'");
}

struct CriticalValueTable {
    TableKind kind = TableKind::z_percentiles;
    std::vector<double> c_grid;      // ascending
    std::vector<double> delta_grid;  // ascending (delta or delta_tau axis)
    std::vector<double> alpha_grid;  // ascending levels
    std::vector<double> values;      // row-major over the kind's row axes
    long sim_T = 0;
    long replications = 0;
    std::uint64_t seed = 0;
    int version = 1;
    std::map<std::string, std::string> extras;

    std::size_t row_width() const {
        switch (kind) {
            case TableKind::z_percentiles: return alpha_grid.size();
            case TableKind::dfgls_quantiles: return alpha_grid.size();
            case TableKind::alpha1_levels: return 4;  // a_low a_high worst_left worst_right
        }
        return 0;
    }
    std::size_t row_count() const {
        switch (kind) {
            case TableKind::z_percentiles: return c_grid.size() * delta_grid.size();
            case TableKind::dfgls_quantiles: return c_grid.size();
            case TableKind::alpha1_levels: return delta_grid.size();
        }
        return 0;
    }
};

// Switching thresholds and test levels; shipped defaults below.
struct SwitchThresholds {
    double c_bar_L = -90.0;    // right-tail switch point
    double c_under_L = -100.0; // left-tail switch point
    double alpha2 = 0.10;
    double epsilon = 0.04;     // calibration slack; alpha2 - epsilon drives calibration
};

namespace table_detail {

inline void require(bool ok, const std::string& msg) {
    if (!ok) throw TableError(msg);
}

inline std::string join_grid(const std::vector<double>& g) {
    std::string s;
    char buf[64];
    for (std::size_t i = 0; i < g.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.10g", g[i]);
        if (i) s += ',';
        s += buf;
    }
    return s;
}

inline std::vector<double> parse_grid(const std::string& s) {
    std::vector<double> g;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        g.push_back(std::stod(item));
    }
    return g;
}

inline void check_sorted_strict(const std::vector<double>& g, const std::string& name) {
    for (std::size_t i = 1; i < g.size(); ++i)
        require(g[i] > g[i - 1], "table grid '" + name + "' not strictly ascending");
}

}  // namespace table_detail

inline void validate_table(const CriticalValueTable& t) {
    table_detail::check_sorted_strict(t.c_grid, "c_grid");
    table_detail::check_sorted_strict(t.delta_grid, "delta_grid");
    table_detail::check_sorted_strict(t.alpha_grid, "alpha_grid");
    table_detail::require(t.values.size() == t.row_count() * t.row_width(),
                          "table value count disagrees with grid shape");
    for (double v : t.values)
        table_detail::require(std::isfinite(v), "table holds a non-finite value");
}

inline std::string serialize_table(const CriticalValueTable& t) {
    std::ostringstream os;
    os << "# critical value table\n";
    os << "version=" << t.version << "\n";
    os << "kind=" << table_kind_name(t.kind) << "\n";
    os << "sim_T=" << t.sim_T << "\n";
    os << "replications=" << t.replications << "\n";
    os << "seed=" << t.seed << "\n";
    os << "c_grid=" << table_detail::join_grid(t.c_grid) << "\n";
    os << "delta_grid=" << table_detail::join_grid(t.delta_grid) << "\n";
    os << "alpha_grid=" << table_detail::join_grid(t.alpha_grid) << "\n";
    for (const auto& [k, v] : t.extras) os << k << "=" << v << "\n";

    char buf[64];
    const std::size_t w = t.row_width();
    const std::size_t rows = t.row_count();
    for (std::size_t r = 0; r < rows; ++r) {
        std::string line;
        auto push = [&](double x) {
            std::snprintf(buf, sizeof buf, "%.6g", x);
            if (!line.empty()) line += ' ';
            line += buf;
        };
        if (t.kind == TableKind::z_percentiles) {
            push(t.c_grid[r / t.delta_grid.size()]);
            push(t.delta_grid[r % t.delta_grid.size()]);
        } else if (t.kind == TableKind::dfgls_quantiles) {
            push(t.c_grid[r]);
        } else {
            push(t.delta_grid[r]);
        }
        for (std::size_t j = 0; j < w; ++j) push(t.values[r * w + j]);
        os << line << "\n";
    }
    return os.str();
}

inline CriticalValueTable parse_table(std::istream& in, const std::string& origin) {
    CriticalValueTable t;
    std::string line;
    std::vector<std::vector<double>> rows;
    bool in_data = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (!in_data && eq != std::string::npos &&
            line.find_first_of(" \t") > eq) {
            const std::string key = line.substr(0, eq);
            const std::string val = line.substr(eq + 1);
            if (key == "version") t.version = std::stoi(val);
            else if (key == "kind") t.kind = table_kind_from(val);
            else if (key == "sim_T") t.sim_T = std::stol(val);
            else if (key == "replications") t.replications = std::stol(val);
            else if (key == "seed") t.seed = std::stoull(val);
            else if (key == "c_grid") t.c_grid = table_detail::parse_grid(val);
            else if (key == "delta_grid") t.delta_grid = table_detail::parse_grid(val);
            else if (key == "alpha_grid") t.alpha_grid = table_detail::parse_grid(val);
            else t.extras[key] = val;
            continue;
        }
        in_data = true;
        std::vector<double> row;
        std::stringstream ss(line);
        double x;
        while (ss >> x) row.push_back(x);
        if (!row.empty()) rows.push_back(std::move(row));
    }

    const std::size_t axes = t.kind == TableKind::z_percentiles ? 2 : 1;
    const std::size_t w = t.row_width();
    table_detail::require(rows.size() == t.row_count(),
                          origin + ": expected " + std::to_string(t.row_count()) +
                              " rows, found " + std::to_string(rows.size()));
    t.values.assign(t.row_count() * w, 0.0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table_detail::require(rows[r].size() == axes + w,
                              origin + ": row " + std::to_string(r) + " has wrong width");
        for (std::size_t j = 0; j < w; ++j) t.values[r * w + j] = rows[r][axes + j];
    }
    validate_table(t);
    return t;
}

inline CriticalValueTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw TableError("cannot open table file '" + path + "'");
    return parse_table(in, path);
}

// Writes via a temporary then renames, so interrupted runs never leave a
// truncated table behind.
inline void save_table_atomic(const CriticalValueTable& t, const std::string& path) {
    validate_table(t);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw TableError("cannot write table file '" + tmp + "'");
        out << serialize_table(t);
        if (!out) throw TableError("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

// --- lookups -------------------------------------------------------------------

namespace table_detail {

inline std::size_t exact_index(const std::vector<double>& grid, double x,
                               const std::string& what) {
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (std::fabs(grid[i] - x) < 1e-9) return i;
    throw TableError("table missing requested " + what);
}

}  // namespace table_detail

// Percentile of the near-unit-root t limit at (c, delta), linear in c
// between grid points, clamped at the grid edges.
inline double z_quantile(const CriticalValueTable& t, double c, double delta, double level) {
    table_detail::require(t.kind == TableKind::z_percentiles, "z_quantile: wrong table kind");
    const std::size_t di = table_detail::exact_index(t.delta_grid, delta, "delta");
    const std::size_t ai = table_detail::exact_index(t.alpha_grid, level, "level");
    const std::size_t nd = t.delta_grid.size();
    const std::size_t w = t.alpha_grid.size();
    auto at = [&](std::size_t ci) { return t.values[(ci * nd + di) * w + ai]; };

    if (c <= t.c_grid.front()) return at(0);
    if (c >= t.c_grid.back()) return at(t.c_grid.size() - 1);
    std::size_t i = 1;
    while (t.c_grid[i] < c) ++i;
    const double f = (c - t.c_grid[i - 1]) / (t.c_grid[i] - t.c_grid[i - 1]);
    return at(i - 1) + f * (at(i) - at(i - 1));
}

// DF-GLS statistic quantile curve across c at one level, isotonic-regularized.
inline std::vector<double> dfgls_curve(const CriticalValueTable& t, double level) {
    table_detail::require(t.kind == TableKind::dfgls_quantiles, "dfgls_curve: wrong table kind");
    const std::size_t ai = table_detail::exact_index(t.alpha_grid, level, "level " + std::to_string(level));
    const std::size_t w = t.alpha_grid.size();
    std::vector<double> curve(t.c_grid.size());
    for (std::size_t ci = 0; ci < t.c_grid.size(); ++ci) curve[ci] = t.values[ci * w + ai];
    return isotonic_increasing(curve);
}

// Adjusted first-stage levels by nearest row on the delta_tau grid; values
// off the grid clamp to the nearest end (the most conservative row below).
inline std::pair<double, double> lookup_alpha1(const CriticalValueTable& t, double delta_tau) {
    table_detail::require(t.kind == TableKind::alpha1_levels, "lookup_alpha1: wrong table kind");
    std::size_t best = 0;
    double bestd = std::fabs(t.delta_grid[0] - delta_tau);
    for (std::size_t i = 1; i < t.delta_grid.size(); ++i) {
        const double d = std::fabs(t.delta_grid[i] - delta_tau);
        if (d < bestd) {
            bestd = d;
            best = i;
        }
    }
    return {t.values[best * 4 + 0], t.values[best * 4 + 1]};
}

// First-stage levels as published alongside the method (lookup by delta_tau);
// the generated table is the default source, this is the provenance-tagged
// alternative.
inline CriticalValueTable paper_alpha1_table() {
    CriticalValueTable t;
    t.kind = TableKind::alpha1_levels;
    t.sim_T = 5000;
    t.replications = 10000;
    t.seed = 0;
    t.extras["source"] = "published";
    t.delta_grid = {-0.797, -0.758, -0.718, -0.678, -0.638, -0.598, -0.558,
                    -0.518, -0.478, -0.439, -0.399, -0.359, -0.319, -0.279,
                    -0.239, -0.199, -0.159, -0.119, -0.080, -0.040};
    t.alpha_grid = {0.01, 0.98};
    const double lo[] = {0.14, 0.15, 0.17, 0.18, 0.19, 0.20, 0.21, 0.22, 0.23, 0.24,
                         0.26, 0.28, 0.28, 0.28, 0.30, 0.32, 0.37, 0.50, 0.61, 0.79};
    const double hi[] = {0.43, 0.50, 0.51, 0.56, 0.58, 0.62, 0.65, 0.68, 0.70, 0.73,
                         0.75, 0.82, 0.89, 0.92, 0.98, 0.98, 0.98, 0.98, 0.98, 0.98};
    t.values.resize(20 * 4);
    for (int i = 0; i < 20; ++i) {
        t.values[i * 4 + 0] = lo[i];
        t.values[i * 4 + 1] = hi[i];
        t.values[i * 4 + 2] = 0.0;
        t.values[i * 4 + 3] = 0.0;
    }
    return t;
}

}  // namespace qpr

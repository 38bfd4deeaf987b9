// Command-line front end: empirical tests over a monthly predictor file,
// lookup-table generation, and the Monte Carlo experiment grids.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qpr/dgp.hpp"
#include "qpr/empirical.hpp"
#include "qpr/fmtest.hpp"
#include "qpr/mc.hpp"
#include "qpr/table_gen.hpp"
#include "qpr/tables.hpp"
#include "qpr/version.hpp"

namespace {

using nlohmann::json;

struct TableSet {
    qpr::CriticalValueTable z, dfgls, alpha1;
    std::string z_path, dfgls_path, alpha1_path;
};

std::string table_path(const std::string& dir, const char* name) {
    return (std::filesystem::path(dir) / name).string();
}

TableSet load_tables(const std::string& dir, const std::string& alpha1_source) {
    TableSet t;
    t.z_path = table_path(dir, "z_percentiles.tbl");
    t.dfgls_path = table_path(dir, "dfgls_quantiles.tbl");
    t.alpha1_path = table_path(dir, "alpha1_levels.tbl");
    t.z = qpr::load_table(t.z_path);
    t.dfgls = qpr::load_table(t.dfgls_path);
    if (alpha1_source == "paper") {
        t.alpha1 = qpr::paper_alpha1_table();
        t.alpha1_path = "(published values)";
    } else {
        t.alpha1 = qpr::load_table(t.alpha1_path);
    }
    return t;
}

std::string provenance_header(std::uint64_t seed, const TableSet* tables) {
    std::string s = "# qpr " + std::string(qpr::kVersion) + "\n";
    s += "# seed=" + std::to_string(seed) + "\n";
    if (tables) {
        s += "# table z=" + qpr::file_hash_hex(tables->z_path) +
             " dfgls=" + qpr::file_hash_hex(tables->dfgls_path);
        if (tables->alpha1_path.front() != '(')
            s += " alpha1=" + qpr::file_hash_hex(tables->alpha1_path);
        else
            s += " alpha1=published";
        s += "\n";
    }
    return s;
}

void apply_config_file(qpr::EmpiricalConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw qpr::IngestError("cannot open config file '" + path + "'");
    json j;
    in >> j;
    if (j.contains("input")) cfg.input_path = j["input"].get<std::string>();
    if (j.contains("start")) cfg.start_yyyymm = j["start"].get<long>();
    if (j.contains("end")) cfg.end_yyyymm = j["end"].get<long>();
    if (j.contains("predictor")) cfg.predictor = j["predictor"].get<std::string>();
    if (j.contains("custom_column")) cfg.custom_column = j["custom_column"].get<std::string>();
    if (j.contains("alpha2")) cfg.alpha2 = j["alpha2"].get<double>();
    if (j.contains("taus")) cfg.taus = j["taus"].get<std::vector<double>>();
    if (j.contains("columns")) {
        const auto& c = j["columns"];
        auto set = [&](const char* key, std::string& field) {
            if (c.contains(key)) field = c[key].get<std::string>();
        };
        set("date", cfg.columns.date);
        set("price", cfg.columns.price);
        set("dividends", cfg.columns.dividends);
        set("earnings", cfg.columns.earnings);
        set("book_market", cfg.columns.book_market);
        set("market_return", cfg.columns.market_return);
        set("riskfree", cfg.columns.riskfree);
    }
}

std::vector<double> parse_tau_list(const std::string& s) {
    std::vector<double> taus;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) taus.push_back(std::stod(item));
    return taus;
}

// Experiment presets mirroring the published grid layouts.
qpr::ExperimentGrid preset_grid(int table, long reps, std::uint64_t seed, unsigned threads) {
    qpr::ExperimentGrid g;
    g.taus = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    g.c_values = {0, -5, -10, -25, -50, -200};
    g.delta_values = {-0.95, -0.50};
    g.alternative = {0.0};
    g.T = 400;
    g.replications = reps;
    g.seed = seed;
    g.threads = threads;
    switch (table) {
        case 3:
            g.test_kind = qpr::TestKind::standard_t;
            break;
        case 4:
            g.test_kind = qpr::TestKind::switching_fm;
            break;
        case 5:
            g.test_kind = qpr::TestKind::switching_fm;
            g.delta_values = {-0.95};
            g.nu = 8;
            g.innovation_kind = qpr::InnovationKind::gjr_mix;  // panel A; B/C via flags
            break;
        case 6:
            g.test_kind = qpr::TestKind::switching_fm;
            g.taus = {0.1, 0.3, 0.5, 0.7, 0.9};
            g.c_values = {-5, -10, -25};
            g.alternative = {0.0, 0.0125, 0.0250, 0.0375, 0.0500, 0.0625};
            break;
        case 7:
            g.test_kind = qpr::TestKind::switching_fm;
            g.taus = {0.5, 0.7, 0.9};
            g.c_values = {-5, -10, -25};
            g.tail_alternative = true;
            g.alternative = {0.0, 2.236, 4.472, 6.708, 8.944, 11.180};
            g.zeta2 = 100.0;
            break;
        default:
            throw qpr::DomainError("unknown experiment preset " + std::to_string(table));
    }
    return g;
}

int cmd_test(const qpr::EmpiricalConfig& cfg, std::uint64_t seed) {
    const auto tables = load_tables(cfg.tables_dir, cfg.alpha1_source);
    qpr::SwitchingTables st{&tables.z, &tables.dfgls, &tables.alpha1};
    const auto [y, x] = qpr::ingest(cfg);
    const auto report = qpr::run_quantile_tests(y, x, cfg, st);
    const std::string header = provenance_header(seed, &tables);
    if (cfg.output_path.empty()) {
        qpr::write_empirical_report(report, std::cout, header);
    } else {
        std::ofstream out(cfg.output_path, std::ios::trunc);
        if (!out) throw qpr::IngestError("cannot write '" + cfg.output_path + "'");
        qpr::write_empirical_report(report, out, header);
        std::cout << "wrote " << cfg.output_path << "\n";
    }
    return 0;
}

int cmd_ingest_check(const qpr::EmpiricalConfig& cfg) {
    const auto [y, x] = qpr::ingest(cfg);
    const auto data = qpr::align_predictive(y, x);
    std::cout << "rows: " << y.size() << "\n";
    std::cout << "aligned T: " << data.T << "\n";
    std::cout << "predictor: " << cfg.predictor << " first period " << *x.period << "\n";
    std::cout << "predictor mean: " << qpr::mean_of(x.values) << "\n";
    std::cout << "return mean: " << qpr::mean_of(y.values) << "\n";
    std::cout << "ok\n";
    return 0;
}

int cmd_gen_tables(const std::string& kind, const std::string& dir, std::uint64_t seed,
                   bool paper_scale, unsigned threads, const std::string& gjr_panel) {
    (void)gjr_panel;
    std::filesystem::create_directories(dir);
    qpr::GenOptions opts;
    opts.threads = threads;
    const std::string header = provenance_header(seed, nullptr);

    if (kind == "z" || kind == "all") {
        const long sim_T = paper_scale ? 10000 : 2000;
        const long reps = paper_scale ? 1000000 : 200000;
        auto t = qpr::build_z_table(qpr::default_z_c_grid(), qpr::default_z_delta_grid(),
                                    qpr::default_z_alpha_grid(), sim_T, reps, seed, opts);
        const double check = qpr::z_table_self_check(t);
        if (check > 3.0)
            throw qpr::TableError("z table self-check failed: delta=0 rows deviate from "
                                  "normal quantiles by " + std::to_string(check) + " SEs");
        qpr::save_table_atomic(t, table_path(dir, "z_percentiles.tbl"));
        std::cout << "z_percentiles.tbl written (self-check " << check << " SEs)\n";
    }
    if (kind == "dfgls" || kind == "all") {
        const long sim_T = 2000;
        const long reps = paper_scale ? 500000 : 100000;
        auto t = qpr::simulate_dfgls_quantiles(qpr::default_dfgls_c_grid(),
                                               qpr::default_dfgls_alpha_grid(), sim_T, reps,
                                               seed, opts);
        qpr::save_table_atomic(t, table_path(dir, "dfgls_quantiles.tbl"));
        std::cout << "dfgls_quantiles.tbl written\n";
    }
    if (kind == "alpha1" || kind == "all") {
        const auto z = qpr::load_table(table_path(dir, "z_percentiles.tbl"));
        const auto dfgls = qpr::load_table(table_path(dir, "dfgls_quantiles.tbl"));
        const long sim_T = 5000;
        const long reps = 10000;
        qpr::SwitchThresholds th;
        const auto cal = qpr::calibrate_alpha1(qpr::default_delta_tau_grid(), th, z, dfgls,
                                               sim_T, reps, seed, {}, opts);
        qpr::save_table_atomic(cal.table, table_path(dir, "alpha1_levels.tbl"));
        std::cout << "alpha1_levels.tbl written";
        if (!cal.failed_rows.empty())
            std::cout << " (" << cal.failed_rows.size() << " rows found no feasible level)";
        std::cout << "\n";
    }
    return 0;
}

int cmd_mc(int table, const std::string& panel, long reps, const std::string& out,
           const std::string& tables_dir, std::uint64_t seed, bool paper_scale,
           unsigned threads, const std::string& alpha1_source) {
    if (paper_scale) reps = 10000;
    auto grid = preset_grid(table, reps, seed, threads);
    if (table == 5) {
        if (panel == "B") grid.innovation_kind = qpr::InnovationKind::gjr_only;
        else if (panel == "C") {
            grid.innovation_kind = qpr::InnovationKind::t_only;
            grid.nu = 3;
        } else if (panel != "A" && !panel.empty())
            throw qpr::DomainError("table 5 panel must be A, B or C");
    }
    TableSet tables;
    qpr::SwitchingTables st;
    if (grid.test_kind == qpr::TestKind::switching_fm) {
        tables = load_tables(tables_dir, alpha1_source);
        st = {&tables.z, &tables.dfgls, &tables.alpha1};
    }
    const auto report = qpr::run_experiment(grid, st);
    const std::string header = provenance_header(
        seed, grid.test_kind == qpr::TestKind::switching_fm ? &tables : nullptr);
    qpr::write_report(report, out, header);
    std::cout << "wrote " << out << " (+ .se companion)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"switching-FM predictive quantile regression toolkit"};
    app.set_version_flag("--version", std::string("qpr ") + qpr::kVersion);
    app.require_subcommand(1);

    qpr::EmpiricalConfig cfg;
    std::string config_path;
    std::uint64_t seed = 20240501;
    unsigned threads = 0;
    std::string tau_list;

    auto* test = app.add_subcommand("test", "run the switching-FM tests across quantiles");
    test->add_option("--input", cfg.input_path, "monthly CSV file");
    test->add_option("--config", config_path, "JSON config (column mapping, span, taus)");
    test->add_option("--predictor", cfg.predictor, "dp | ep | bm | custom");
    test->add_option("--custom-column", cfg.custom_column, "column for predictor=custom");
    test->add_option("--start", cfg.start_yyyymm, "first yyyymm");
    test->add_option("--end", cfg.end_yyyymm, "last yyyymm");
    test->add_option("--tau-list", tau_list, "comma-separated quantile levels");
    test->add_option("--alpha2", cfg.alpha2, "second-stage size budget")
        ->check(CLI::Range(0.001, 0.999));
    test->add_option("--tables-dir", cfg.tables_dir, "directory with generated tables")
        ->required();
    test->add_option("--alpha1-source", cfg.alpha1_source, "generated | paper");
    test->add_option("--output", cfg.output_path, "report path (stdout when empty)");
    test->add_option("--seed", seed, "seed recorded in the report header");
    test->add_option("--threads", threads, "worker threads (0 = all)");

    auto* check = app.add_subcommand("ingest-check", "validate an input file");
    check->add_option("--input", cfg.input_path)->required();
    check->add_option("--config", config_path);
    check->add_option("--predictor", cfg.predictor);
    check->add_option("--custom-column", cfg.custom_column);
    check->add_option("--start", cfg.start_yyyymm);
    check->add_option("--end", cfg.end_yyyymm);

    std::string gen_kind = "all", gen_dir, gjr_panel;
    bool paper_scale = false;
    auto* gen = app.add_subcommand("gen-tables", "simulate the lookup tables");
    gen->add_option("--kind", gen_kind, "z | dfgls | alpha1 | all");
    gen->add_option("--tables-dir", gen_dir, "output directory")->required();
    gen->add_option("--seed", seed, "base seed");
    gen->add_flag("--paper-scale", paper_scale, "full-scale replication counts");
    gen->add_option("--threads", threads, "worker threads (0 = all)");

    int mc_table = 4;
    std::string mc_panel, mc_out = "mc_report.tsv", mc_tables_dir, mc_alpha1 = "generated";
    long mc_reps = 2000;
    auto* mc = app.add_subcommand("mc", "size/power experiment grids");
    mc->add_option("--table", mc_table, "experiment preset: 3,4,5,6,7")->required();
    mc->add_option("--panel", mc_panel, "table 5 panel: A, B or C");
    mc->add_option("--reps", mc_reps, "replications per cell");
    mc->add_option("--out", mc_out, "output path");
    mc->add_option("--tables-dir", mc_tables_dir, "directory with generated tables");
    mc->add_option("--alpha1-source", mc_alpha1, "generated | paper");
    mc->add_option("--seed", seed, "base seed");
    mc->add_flag("--paper-scale", paper_scale, "10000 replications per cell");
    mc->add_option("--threads", threads, "worker threads (0 = all)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) apply_config_file(cfg, config_path);
        if (!tau_list.empty()) cfg.taus = parse_tau_list(tau_list);
        for (std::size_t i = 1; i < cfg.taus.size(); ++i)
            if (cfg.taus[i] <= cfg.taus[i - 1])
                throw qpr::DomainError("tau list must be strictly increasing");

        if (test->parsed()) return cmd_test(cfg, seed);
        if (check->parsed()) return cmd_ingest_check(cfg);
        if (gen->parsed()) return cmd_gen_tables(gen_kind, gen_dir, seed, paper_scale,
                                                 threads, gjr_panel);
        if (mc->parsed()) {
            if (preset_grid(mc_table, 100, 0, 0).test_kind == qpr::TestKind::switching_fm &&
                mc_tables_dir.empty())
                throw qpr::TableError("mc: --tables-dir is required for the switching test");
            return cmd_mc(mc_table, mc_panel, mc_reps, mc_out, mc_tables_dir, seed,
                          paper_scale, threads);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

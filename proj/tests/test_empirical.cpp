#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qpr/empirical.hpp"
#include "qpr/table_gen.hpp"
#include "synthetic_data.hpp"

using namespace qpr;
using Catch::Approx;

namespace {

std::filesystem::path test_dir() {
    const auto d = std::filesystem::temp_directory_path() / "qpr_empirical_test";
    std::filesystem::create_directories(d);
    return d;
}

EmpiricalConfig base_config(const std::string& input) {
    EmpiricalConfig cfg;
    cfg.input_path = input;
    cfg.start_yyyymm = 192601;
    cfg.end_yyyymm = 201512;
    return cfg;
}

}  // namespace

TEST_CASE("ingest aligns the documented span to T = rows - 1") {
    const auto path = (test_dir() / "full.csv").string();
    qpr_test::write_synthetic_monthly(path, 1080);
    auto cfg = base_config(path);
    const auto [y, x] = ingest(cfg);
    CHECK(y.size() == 1080);
    const auto data = align_predictive(y, x);
    CHECK(data.T == 1079);
    CHECK(*y.period == 192601);
}

TEST_CASE("dp and ep are log ratios; bm and custom pass through") {
    const auto path = (test_dir() / "pred.csv").string();
    qpr_test::write_synthetic_monthly(path, 60);
    auto cfg = base_config(path);
    cfg.end_yyyymm = 193012;

    cfg.predictor = "dp";
    const auto [y1, dp] = ingest(cfg);
    cfg.predictor = "ep";
    const auto [y2, ep] = ingest(cfg);
    cfg.predictor = "bm";
    const auto [y3, bm] = ingest(cfg);
    cfg.predictor = "custom";
    cfg.custom_column = "b/m";
    const auto [y4, custom] = ingest(cfg);

    CHECK(dp.values[10] < 0.0);   // log of a small ratio
    CHECK(ep.values[10] < 0.0);
    CHECK(bm.values == custom.values);
    CHECK(y1.values == y3.values);
    // dp = log(D12/Index): recompute from the file
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::stringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    const double expected = std::log(std::stod(fields[2]) / std::stod(fields[1]));
    CHECK(dp.values[0] == Approx(expected).epsilon(1e-9));
}

TEST_CASE("missing data: edge trimming and interior gaps") {
    const auto dir = test_dir();
    SECTION("edge rows with missing predictor are trimmed") {
        const auto path = (dir / "tail.csv").string();
        qpr_test::write_synthetic_monthly(path, 120, 5, /*blank_tail_rows=*/6);
        auto cfg = base_config(path);
        cfg.end_yyyymm = 999912;
        const auto [y, x] = ingest(cfg);
        CHECK(y.size() == 114);
    }
    SECTION("interior missing value raises a diagnostic naming the row") {
        const auto path = (dir / "gap.csv").string();
        qpr_test::write_synthetic_monthly(path, 60, 6);
        // blank one interior dividend field
        std::ifstream in(path);
        std::stringstream all;
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            if (row == 30) {
                auto first = line.find(',');
                auto second = line.find(',', first + 1);
                auto third = line.find(',', second + 1);
                line = line.substr(0, second + 1) + line.substr(third);
            }
            all << line << "\n";
            ++row;
        }
        std::ofstream(path, std::ios::trunc) << all.str();
        auto cfg = base_config(path);
        cfg.end_yyyymm = 999912;
        try {
            ingest(cfg);
            FAIL("expected IngestError");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("192806") != std::string::npos);
        }
    }
    SECTION("calendar gap raises") {
        const auto path = (dir / "skip.csv").string();
        qpr_test::write_synthetic_monthly(path, 60, 7);
        std::ifstream in(path);
        std::stringstream all;
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            if (row != 30) all << line << "\n";
            ++row;
        }
        std::ofstream(path, std::ios::trunc) << all.str();
        auto cfg = base_config(path);
        cfg.end_yyyymm = 999912;
        CHECK_THROWS_AS(ingest(cfg), IngestError);
    }
    SECTION("missing required column names the role") {
        const auto path = (dir / "nocol.csv").string();
        std::ofstream out(path);
        out << "yyyymm,Index,E12,b/m,CRSP_SPvw,Rfree\n";
        out << "192601,15.0,1.0,0.5,0.01,0.002\n192602,15.1,1.0,0.5,0.01,0.002\n";
        out.close();
        auto cfg = base_config(path);
        cfg.predictor = "dp";
        try {
            ingest(cfg);
            FAIL("expected IngestError");
        } catch (const IngestError& e) {
            CHECK(std::string(e.what()).find("D12") != std::string::npos);
        }
    }
}

TEST_CASE("end-to-end report on synthetic data is well formed") {
    const auto path = (test_dir() / "e2e.csv").string();
    qpr_test::write_synthetic_monthly(path, 600, 8);
    auto cfg = base_config(path);
    cfg.end_yyyymm = 999912;
    cfg.taus = {0.25, 0.5, 0.75};

    static const CriticalValueTable z =
        build_z_table({-120, -100, -90, -50, -10, 0, 4}, {-1, 0},
                      default_z_alpha_grid(), 1000, 20000, 814);
    static const CriticalValueTable d = simulate_dfgls_quantiles(
        {-200, -120, -90, -60, -40, -30, -20, -15, -10, -5, -2, 0, 2, 4},
        default_dfgls_alpha_grid(), 1000, 20000, 815);
    static const CriticalValueTable a = paper_alpha1_table();
    const SwitchingTables tables{&z, &d, &a};

    const auto [y, x] = ingest(cfg);
    const auto report = run_quantile_tests(y, x, cfg, tables);
    REQUIRE(report.rows.size() == 3);
    for (const auto& row : report.rows) {
        CHECK(row.switching.gamma1_lower <= row.switching.gamma1_upper);
        CHECK(std::isfinite(row.t_std));
        CHECK(std::isfinite(row.t_hac));
        CHECK(std::fabs(row.delta_tau) <= 1.0);
        CHECK(row.switching.alpha1_high >= row.switching.alpha1_low);
    }
    CHECK(report.indicators.c_lower_95 <= report.indicators.c_upper_95);
    CHECK(std::fabs(report.indicators.delta_hat) <= 1.0);
    // synthetic endogeneity is negative by construction
    CHECK(report.indicators.delta_hat < -0.5);

    std::ostringstream os;
    write_empirical_report(report, os, "# test\n");
    const auto s = os.str();
    CHECK(s.find("gamma1_lower") != std::string::npos);
    CHECK(s.find("reject") != std::string::npos);
    CHECK(s.find("tau\t0.2") != std::string::npos);
}

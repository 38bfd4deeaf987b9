#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qpr/rng.hpp"
#include "qpr/table_gen.hpp"
#include "qpr/unitroot.hpp"

using namespace qpr;
using Catch::Approx;

namespace {

std::vector<double> simulate_ar1(std::uint64_t key, std::size_t N, double phi) {
    RngStream rng(key);
    std::vector<double> x(N);
    x[0] = 0.0;
    for (std::size_t t = 1; t < N; ++t) x[t] = phi * x[t - 1] + rng.normal();
    return x;
}

// small shared inversion table for the stock_ci tests
const CriticalValueTable& test_dfgls_table() {
    static const CriticalValueTable t = simulate_dfgls_quantiles(
        {-80, -60, -40, -30, -20, -15, -10, -5, -2, 0, 2, 4},
        default_dfgls_alpha_grid(), 500, 20000, 777, {});
    return t;
}

}  // namespace

TEST_CASE("gls demeaning removes a constant shift") {
    auto x = simulate_ar1(stream_key(5, 1), 300, 0.99);
    std::vector<double> shifted(x);
    for (auto& v : shifted) v += 15.0;
    const auto a = gls_demean(x);
    const auto b = gls_demean(shifted);
    for (std::size_t t = 0; t < x.size(); ++t)
        CHECK(a[t] == Approx(b[t]).margin(1e-9));
}

TEST_CASE("dfgls rejects a unit root at close to the nominal rate") {
    const int reps = 2000;
    int reject = 0;
    for (int r = 0; r < reps; ++r) {
        const auto x = simulate_ar1(stream_key(600, 2, 0, 0, r), 2000, 1.0);
        const auto res = dfgls(x);
        if (res.t_stat < -1.95) ++reject;
        if (r == 0) {
            CHECK(res.T == 2000);
            CHECK(res.lags >= 0);
            CHECK(res.lags <= default_adf_lag_cap(2000));
        }
    }
    const double rate = static_cast<double>(reject) / reps;
    CHECK(rate == Approx(0.05).margin(0.02));
}

TEST_CASE("dfgls has power against a strongly stationary series") {
    const int reps = 500;
    int reject = 0;
    for (int r = 0; r < reps; ++r) {
        const auto x = simulate_ar1(stream_key(601, 3, 0, 0, r), 1000, 0.5);
        if (dfgls(x).t_stat < -1.95) ++reject;
    }
    CHECK(static_cast<double>(reject) / reps >= 0.99);
}

TEST_CASE("dfgls picks up the true phi under persistence") {
    const auto x = simulate_ar1(stream_key(602, 4), 5000, 0.995);
    const auto res = dfgls(x);
    CHECK(res.phi_hat == Approx(0.995).margin(0.01));
    CHECK_THROWS_AS(dfgls(std::vector<double>(10, 1.0)), SampleTooSmallError);
}

TEST_CASE("stock_ci inverts the quantile curves") {
    const auto& table = test_dfgls_table();

    SECTION("median statistic at c=0 gives an interval straddling zero") {
        const double t_med = dfgls_curve(table, 0.50)[9];  // c = 0 row
        DfGlsResult r;
        r.t_stat = t_med;
        const auto ci = stock_ci(r, 0.05, table);
        CHECK(ci.c_lower < 0.0);
        CHECK(ci.c_upper > 0.0);
        CHECK_FALSE(ci.empty_acceptance);
    }

    SECTION("very negative statistic clamps at the grid lower end") {
        DfGlsResult r;
        r.t_stat = -15.0;
        const auto ci = stock_ci(r, 0.05, table);
        CHECK(ci.c_lower == table.c_grid.front());
        CHECK(ci.c_upper == table.c_grid.front());
        CHECK(ci.clamped_lower);
        CHECK(ci.empty_acceptance);
    }

    SECTION("monotone in the observed statistic") {
        double prev_lo = -1e300, prev_hi = -1e300;
        for (double t = -4.0; t <= 2.0; t += 0.25) {
            DfGlsResult r;
            r.t_stat = t;
            const auto ci = stock_ci(r, 0.10, table);
            CHECK(ci.c_lower >= prev_lo - 1e-12);
            CHECK(ci.c_upper >= prev_hi - 1e-12);
            prev_lo = ci.c_lower;
            prev_hi = ci.c_upper;
            CHECK(ci.c_lower <= ci.c_upper);
        }
    }

    SECTION("nesting: the 10% interval sits inside the 5% interval") {
        for (double t : {-2.5, -1.5, -0.5, 0.5}) {
            DfGlsResult r;
            r.t_stat = t;
            const auto wide = stock_ci(r, 0.05, table);
            const auto narrow = stock_ci(r, 0.10, table);
            CHECK(narrow.c_lower >= wide.c_lower - 1e-9);
            CHECK(narrow.c_upper <= wide.c_upper + 1e-9);
        }
    }

    SECTION("missing level raises a table error") {
        DfGlsResult r;
        r.t_stat = -1.0;
        CHECK_THROWS_AS(stock_ci(r, 0.0513, table), TableError);
    }
}

TEST_CASE("stock_ci coverage at matched sample length") {
    const auto& table = test_dfgls_table();
    const double alpha1 = 0.10;
    for (double c : {0.0, -5.0, -10.0, -25.0}) {
        const int reps = 600;
        int cover = 0;
        for (int r = 0; r < reps; ++r) {
            const double phi = 1.0 + c / 500.0;
            const auto x = simulate_ar1(stream_key(603, 5, static_cast<std::uint64_t>(-c), 0, r),
                                        500, phi);
            const auto res = dfgls(x, 0);
            const auto ci = stock_ci(res, alpha1, table);
            if (ci.c_lower <= c && c <= ci.c_upper) ++cover;
        }
        const double rate = static_cast<double>(cover) / reps;
        INFO("c = " << c);
        CHECK(rate >= 1.0 - alpha1 - 0.03);
    }
}

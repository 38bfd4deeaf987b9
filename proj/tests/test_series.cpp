#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qpr/rng.hpp"
#include "qpr/series.hpp"

using namespace qpr;

TEST_CASE("TimeSeries validates contents") {
    CHECK_THROWS_AS(TimeSeries({1.0}), DomainError);
    CHECK_THROWS_AS(TimeSeries({1.0, std::nan("")}), DomainError);
    CHECK_NOTHROW(TimeSeries({1.0, 2.0}, "x", 190001));
}

TEST_CASE("align_predictive shifts the predictor by one period") {
    TimeSeries y({1, 2, 3}, "y");
    TimeSeries x({10, 20, 30}, "x");
    const auto d = align_predictive(y, x, /*enforce_floor=*/false);
    CHECK(d.T == 2);
    CHECK(d.y == std::vector<double>{2, 3});
    CHECK(d.x_lag == std::vector<double>{10, 20});
    CHECK(d.x_level == std::vector<double>{20, 30});
}

TEST_CASE("align_predictive rejects mismatched inputs") {
    TimeSeries y({1, 2, 3}, "y");
    TimeSeries x({10, 20}, "x");
    CHECK_THROWS_AS(align_predictive(y, x, false), AlignmentError);

    TimeSeries y2({1, 2}, "y", 190001);
    TimeSeries x2({1, 2}, "x", 190002);
    CHECK_THROWS_AS(align_predictive(y2, x2, false), AlignmentError);

    std::vector<double> v20(20, 0.0);
    for (std::size_t i = 0; i < v20.size(); ++i) v20[i] = static_cast<double>(i);
    CHECK_THROWS_AS(align_predictive(TimeSeries(v20), TimeSeries(v20)), SampleTooSmallError);
}

TEST_CASE("align round-trip recovers the original series") {
    RngStream rng(stream_key(7, 99));
    std::vector<double> yv(40), xv(40);
    for (int i = 0; i < 40; ++i) {
        yv[i] = rng.normal();
        xv[i] = rng.normal();
    }
    const auto d = align_predictive(TimeSeries(yv), TimeSeries(xv));
    // re-interleave: x = (x_lag[0], x_level...), y = (y_0, y...)
    std::vector<double> x_back;
    x_back.push_back(d.x_lag[0]);
    x_back.insert(x_back.end(), d.x_level.begin(), d.x_level.end());
    CHECK(x_back == xv);
    for (std::size_t t = 0; t < d.T; ++t) CHECK(d.y[t] == yv[t + 1]);
    CHECK(d.predictor_path() == xv);
}

TEST_CASE("demean basics") {
    CHECK(demean({1, 2, 3}) == std::vector<double>{-1, 0, 1});
    CHECK(demean({5, 5, 5}) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(demean({}), DomainError);
}

TEST_CASE("demean output sums to zero and is idempotent") {
    RngStream rng(stream_key(11, 99));
    std::vector<double> v(257);
    double big = 0.0;
    for (auto& x : v) {
        x = 1000.0 * rng.normal();
        big = std::max(big, std::fabs(x));
    }
    const auto d1 = demean(v);
    double sum = 0.0;
    for (double x : d1) sum += x;
    CHECK(std::fabs(sum) <= 1e-10 * static_cast<double>(v.size()) * big);

    const auto d2 = demean(d1);
    for (std::size_t i = 0; i < v.size(); ++i)
        CHECK(std::fabs(d2[i] - d1[i]) <= 1e-12 * (1.0 + std::fabs(d1[i])));
}

TEST_CASE("make_dataset enforces the alignment identity") {
    CHECK_THROWS_AS(make_dataset({1, 2, 3}, {9, 8, 7}, {1, 2, 3}, false), AlignmentError);
    CHECK_NOTHROW(make_dataset({1, 2, 3}, {9, 8, 7}, {8, 7, 6}, false));
}

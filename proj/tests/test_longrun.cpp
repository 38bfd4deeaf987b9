#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "qpr/longrun.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/rng.hpp"
#include "qpr/series.hpp"

using namespace qpr;
using Catch::Approx;

namespace {

PredictiveDataset simple_dataset(const std::vector<double>& y, const std::vector<double>& x_path) {
    std::vector<double> xl(x_path.begin(), x_path.end() - 1);
    std::vector<double> xlev(x_path.begin() + 1, x_path.end());
    return make_dataset(y, xl, xlev, false);
}

}  // namespace

TEST_CASE("kernels satisfy k(0)=1 and symmetry") {
    for (auto k : {KernelId::parzen, KernelId::bartlett, KernelId::quadratic_spectral}) {
        CHECK(kernel_weight(k, 0.0) == Approx(1.0));
        for (double x : {0.1, 0.4, 0.9, 1.7}) {
            CHECK(kernel_weight(k, x) == Approx(kernel_weight(k, -x)));
        }
    }
    CHECK(parzen_kernel(1.0) == 0.0);
    CHECK(bartlett_kernel(0.5) == Approx(0.5));
}

TEST_CASE("white-noise long-run variance matches the population values") {
    RngStream rng(stream_key(101, 1));
    const std::size_t T = 5000;
    std::vector<double> psi(T), v(T);
    for (std::size_t t = 0; t < T; ++t) {
        psi[t] = rng.normal();
        v[t] = rng.normal();
    }
    const auto lr = hvar_prewhitened_omega(psi, v);
    CHECK_FALSE(lr.prewhitening_failed);
    CHECK(lr.omega_psi2 == Approx(1.0).margin(0.1));
    CHECK(lr.omega_v2 == Approx(1.0).margin(0.1));
    CHECK(std::fabs(lr.delta_tau) < 0.1);
    CHECK(std::fabs(lr.lambda_vv) < 0.05);
}

TEST_CASE("degenerate v lands on the eigenvalue floor") {
    RngStream rng(stream_key(101, 2));
    std::vector<double> psi(200), v(200, 0.0);
    for (auto& p : psi) p = rng.normal();
    const auto lr = hvar_prewhitened_omega(psi, v);
    CHECK(lr.omega_v2 > 0.0);
    CHECK(lr.omega_v2 < 1e-6);
    CHECK(lr.floor_events > 0);
    CHECK(std::fabs(lr.delta_tau) <= 1.0);
}

TEST_CASE("lambda_vv for an MA(1)") {
    // v_t = e_t + 0.5 e_{t-1}: omega_v^2 = 2.25, var = 1.25, lambda = 0.5
    RngStream rng(stream_key(101, 3));
    const std::size_t T = 20000;
    std::vector<double> psi(T), v(T);
    double prev = rng.normal();
    for (std::size_t t = 0; t < T; ++t) {
        const double e = rng.normal();
        v[t] = e + 0.5 * prev;
        prev = e;
        psi[t] = rng.normal();
    }
    const auto lr = hvar_prewhitened_omega(psi, v);
    CHECK(lambda_vv(v, lr.omega_v2) == Approx(0.5).margin(0.12));
    CHECK(lr.lambda_vv == Approx(lambda_vv(v, lr.omega_v2)));

    // iid case: one-sided sum is zero
    RngStream rng2(stream_key(101, 4));
    std::vector<double> v2(5000), psi2(5000);
    for (std::size_t t = 0; t < 5000; ++t) {
        v2[t] = rng2.normal();
        psi2[t] = rng2.normal();
    }
    const auto lr2 = hvar_prewhitened_omega(psi2, v2);
    CHECK(std::fabs(lambda_vv(v2, lr2.omega_v2)) < 0.05);
}

TEST_CASE("sigma_hat hand-summation fixtures") {
    const std::vector<double> y{1.0, -2.0, 0.5, 3.0};
    const std::vector<double> xp{0.2, -0.4, 0.9, 0.1, -0.3};
    auto data = simple_dataset(y, xp);
    QuantileFit fit;
    fit.tau = 0.5;
    fit.gamma0 = 0.0;
    fit.gamma1 = 0.0;
    fit.residuals = y;
    fit.psi = {0.5, -0.5, 0.5, 0.5};
    fit.bandwidth_h = 1.0;

    SECTION("m=0 gives Gamma(0) exactly") {
        const Mat2 s = sigma_hat(fit, data, KernelId::bartlett, 0);
        const Mat2 g0 = score_autocov(fit, data, 0);
        CHECK(s.a11 == Approx(g0.a11));
        CHECK(s.a12 == Approx(g0.a12));
        CHECK(s.a22 == Approx(g0.a22));
    }

    SECTION("m=2 Bartlett: lag-1 weighted 1/2, lag-2 weighted 0") {
        // direct summation oracle
        auto gamma = [&](int ell) {
            double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
            for (int t = ell; t < 4; ++t) {
                a11 += fit.psi[t] * fit.psi[t - ell];
                a12 += fit.psi[t] * fit.psi[t - ell] * data.x_lag[t - ell];
                a21 += data.x_lag[t] * fit.psi[t] * fit.psi[t - ell];
                a22 += data.x_lag[t] * fit.psi[t] * fit.psi[t - ell] * data.x_lag[t - ell];
            }
            return Mat2{a11 / 4.0, a12 / 4.0, a21 / 4.0, a22 / 4.0};
        };
        const Mat2 g0 = gamma(0);
        const Mat2 g1 = gamma(1);
        Mat2 expected = g0 + (g1 + g1.transpose()) * 0.5;
        expected = expected.symmetrized();
        const Mat2 s = sigma_hat(fit, data, KernelId::bartlett, 2);
        CHECK(s.a11 == Approx(expected.a11).epsilon(1e-13));
        CHECK(s.a12 == Approx(expected.a12).epsilon(1e-13));
        CHECK(s.a22 == Approx(expected.a22).epsilon(1e-13));
        CHECK(s.a12 == Approx(s.a21));
    }

    SECTION("zero psi gives the zero matrix") {
        fit.psi = {0, 0, 0, 0};
        const Mat2 s = sigma_hat(fit, data, KernelId::parzen, 1);
        CHECK(s.a11 == 0.0);
        CHECK(s.a12 == 0.0);
        CHECK(s.a22 == 0.0);
    }

    SECTION("m >= T rejected") {
        CHECK_THROWS_AS(sigma_hat(fit, data, KernelId::parzen, 4), DomainError);
    }
}

TEST_CASE("recoloring identity: zero coefficients reduce to the plain HAC") {
    RngStream rng(stream_key(101, 5));
    const std::size_t T = 300;
    std::vector<double> psi(T), v(T);
    for (std::size_t t = 0; t < T; ++t) {
        psi[t] = rng.normal();
        v[t] = 0.4 * (t > 0 ? v[t - 1] : 0.0) + rng.normal();
    }
    const auto forced = hvar_prewhitened_omega(psi, v, /*force_zero_phi=*/true);
    const std::vector<double> psi_w(psi.begin() + 12, psi.end());
    const std::vector<double> v_w(v.begin() + 12, v.end());
    const Mat2 plain = plain_omega(psi_w, v_w);
    CHECK(forced.omega_psi2 == plain.a11);
    CHECK(forced.omega_psi_v == plain.a12);
    CHECK(forced.omega_v2 == plain.a22);
}

TEST_CASE("hac_t is invariant to scaling y") {
    RngStream rng(stream_key(101, 6));
    const std::size_t T = 400;
    std::vector<double> xp(T + 1), y(T);
    xp[0] = 0.0;
    for (std::size_t t = 1; t <= T; ++t) xp[t] = 0.97 * xp[t - 1] + rng.normal();
    for (std::size_t t = 0; t < T; ++t) y[t] = rng.normal();
    auto data = simple_dataset(y, xp);

    const auto fit = solve_qr(data, 0.4);
    const auto lr = estimate_longrun(fit, data);
    const auto t1 = hac_t(fit, data, lr);

    auto data10 = data;
    for (auto& v : data10.y) v *= 10.0;
    const auto fit10 = solve_qr(data10, 0.4);
    const auto lr10 = estimate_longrun(fit10, data10);
    const auto t10 = hac_t(fit10, data10, lr10);

    CHECK(t10.t_value == Approx(t1.t_value).margin(1e-5));
    CHECK(t10.se == Approx(10.0 * t1.se).epsilon(1e-5));
    CHECK(t1.t_value == Approx(t1.gamma1_hat / t1.se));
}

TEST_CASE("iid t-statistic: null rejection near nominal under exogeneity") {
    // stationary exogenous predictor, iid errors, tau = 0.5
    const int reps = 800;
    const std::size_t T = 500;
    int reject = 0;
    int done = 0;
    for (int r = 0; r < reps; ++r) {
        RngStream rng(stream_key(424242, rng_domain::mc_experiment, 0, 0, r));
        std::vector<double> xp(T + 1), y(T);
        xp[0] = 0.0;
        for (std::size_t t = 1; t <= T; ++t) xp[t] = 0.8 * xp[t - 1] + rng.normal();
        for (std::size_t t = 0; t < T; ++t) y[t] = rng.normal();
        const auto data = simple_dataset(y, xp);
        try {
            const auto fit = solve_qr(data, 0.5);
            const auto t = iid_t(fit, data);
            ++done;
            if (t.t_value >= 1.6448536269514722) ++reject;
        } catch (const std::exception&) {
        }
    }
    REQUIRE(done > reps * 95 / 100);
    const double rate = static_cast<double>(reject) / done;
    CHECK(rate > 0.025);
    CHECK(rate < 0.085);
}

TEST_CASE("GJR-driven scores inflate the psi long-run variance at tau=0.1") {
    // exogenous GJR-GARCH innovations: the 0.1-quantile hit sequence is
    // serially dependent, so omega_psi^2 exceeds the iid value tau(1-tau).
    RngStream rng(stream_key(101, 8));
    const std::size_t big = 200000;
    std::vector<double> u(big);
    double sig2 = 0.0001 / (1.0 - 0.0558 - 0.5 * 0.1382 - 0.8226);
    double uprev = 0.0;
    for (std::size_t t = 0; t < big; ++t) {
        sig2 = 0.0001 + 0.0558 * uprev * uprev +
               0.1382 * (uprev < 0 ? uprev * uprev : 0.0) + 0.8226 * sig2;
        uprev = std::sqrt(sig2) * rng.normal();
        u[t] = uprev;
    }
    const double q10 = quantile_of(u, 0.1);
    std::vector<double> psi(big);
    for (std::size_t t = 0; t < big; ++t) psi[t] = 0.1 - (u[t] < q10 ? 1.0 : 0.0);

    // batched-means reference for the long-run variance
    const std::size_t batch = 500;
    const std::size_t nb = big / batch;
    std::vector<double> bm(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        double s = 0.0;
        for (std::size_t i = 0; i < batch; ++i) s += psi[b * batch + i];
        bm[b] = s / std::sqrt(static_cast<double>(batch));
    }
    const double reference = variance_of(bm);
    REQUIRE(reference > 0.09);

    std::vector<double> psi_slice(psi.begin(), psi.begin() + 5000);
    std::vector<double> v(5000);
    RngStream rng2(stream_key(101, 9));
    for (auto& x : v) x = rng2.normal();
    const auto lr = hvar_prewhitened_omega(psi_slice, v);
    CHECK(lr.omega_psi2 > 0.09);
    CHECK(lr.omega_psi2 == Approx(reference).epsilon(0.45));
}

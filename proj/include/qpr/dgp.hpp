#pragma once

// Simulation data-generating processes: near-unit-root AR(1) predictor with
// correlated Gaussian or multivariate-t innovations, an exogenous
// GJR-GARCH(1,1)-t volatility component, and the random-coefficient
// alternative that makes tail quantiles predictable while the median is not.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/rng.hpp"
#include "qpr/series.hpp"

namespace qpr {

enum class InnovationKind { gaussian, student_t, gjr_mix, gjr_only, t_only };

struct GjrParams {
    double omega = 0.0001;
    double alpha = 0.0558;
    double gamma = 0.1382;  // loading on negative shocks
    double beta = 0.8226;

    // unconditional variance under symmetric unit-variance innovations
    double unconditional_variance() const {
        const double persistence = alpha + 0.5 * gamma + beta;
        if (persistence >= 1.0)
            throw DomainError("GjrParams: alpha + gamma/2 + beta must be < 1");
        return omega / (1.0 - persistence);
    }
};

struct DgpSpec {
    std::size_t T = 400;
    double c = 0.0;                 // local-to-unity parameter
    double delta = 0.0;             // innovation correlation
    InnovationKind innovation_kind = InnovationKind::gaussian;
    int nu = 8;                     // t degrees of freedom where applicable
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    double kappa = 0.25;            // local exponent, metadata for zeta scaling
    double zeta1 = 0.0;             // pre-scaled loading T^{kappa-1} * zeta_1
    double zeta2 = 0.0;             // pre-scaled loading T^{kappa-1} * zeta_2
    bool b_identity = false;        // b(e) = e when true, else b(e) = 0
    double mu_x = 0.0;
    GjrParams gjr{};
    std::uint64_t seed = 0;

    void validate() const {
        if (T < 50) throw DomainError("DgpSpec: T must be >= 50");
        if (std::fabs(delta) > 1.0) throw DomainError("DgpSpec: |delta| > 1");
        if (zeta1 < 0.0) throw DomainError("DgpSpec: zeta1 must be >= 0");
        if (zeta1 > 0.0 && (kappa <= 0.0 || kappa >= 0.5))
            throw DomainError("DgpSpec: kappa must lie in (0, 1/2) under the alternative");
        if (innovation_kind != InnovationKind::gaussian && nu <= 2)
            throw DomainError("DgpSpec: t degrees of freedom must exceed 2");
        gjr.unconditional_variance();  // asserts covariance stationarity
    }
};

namespace dgp_detail {

// correlated pair with standardized-t marginals via common chi-square mixing
inline std::pair<double, double> mv_t_pair(RngStream& rng, double rho, int nu) {
    const auto [g1, g2] = rng.correlated_normals(rho);
    const double w = rng.chi_square(nu) / static_cast<double>(nu);
    const double s = std::sqrt((static_cast<double>(nu) - 2.0) / static_cast<double>(nu) / w);
    return {g1 * s, g2 * s};
}

struct GjrState {
    double sigma2;
    double u_prev = 0.0;
    explicit GjrState(const GjrParams& p) : sigma2(p.unconditional_variance()) {}

    double step(const GjrParams& p, double eps) {
        sigma2 = p.omega + p.alpha * u_prev * u_prev +
                 p.gamma * (u_prev < 0.0 ? u_prev * u_prev : 0.0) + p.beta * sigma2;
        u_prev = std::sqrt(sigma2) * eps;
        return u_prev;
    }
};

inline double standardized_t(RngStream& rng, int nu) {
    const double z = rng.normal();
    const double w = rng.chi_square(nu) / static_cast<double>(nu);
    return z / std::sqrt(w) * std::sqrt((static_cast<double>(nu) - 2.0) / static_cast<double>(nu));
}

}  // namespace dgp_detail

// Simulates the aligned dataset: x_t = mu_x + (1 + c/T)-autoregression of v_t
// started at zero, y_t = gamma0 + e_t + gamma1 x_{t-1} + b(e_t)|z1 x_{t-1} + z2|
// with the zeta loadings supplied pre-scaled.
inline PredictiveDataset simulate(const DgpSpec& spec) {
    spec.validate();
    RngStream rng(stream_key(spec.seed, rng_domain::dgp));
    const std::size_t T = spec.T;
    const double phi = 1.0 + spec.c / static_cast<double>(T);

    std::vector<double> v(T + 1, 0.0), e(T + 1, 0.0);
    switch (spec.innovation_kind) {
        case InnovationKind::gaussian: {
            for (std::size_t t = 1; t <= T; ++t) {
                const auto [a, b] = rng.correlated_normals(spec.delta);
                v[t] = a;
                e[t] = b;
            }
            break;
        }
        case InnovationKind::student_t:
        case InnovationKind::t_only: {
            for (std::size_t t = 1; t <= T; ++t) {
                const auto [a, b] = dgp_detail::mv_t_pair(rng, spec.delta, spec.nu);
                v[t] = a;
                e[t] = b;
            }
            break;
        }
        case InnovationKind::gjr_only:
        case InnovationKind::gjr_mix: {
            dgp_detail::GjrState garch(spec.gjr);
            for (int b = 0; b < 500; ++b)
                garch.step(spec.gjr, dgp_detail::standardized_t(rng, spec.nu));
            const double target_sd = std::sqrt(spec.gjr.unconditional_variance());
            for (std::size_t t = 1; t <= T; ++t) {
                const auto [a, u1] = dgp_detail::mv_t_pair(rng, spec.delta, spec.nu);
                const double u2 = garch.step(spec.gjr, dgp_detail::standardized_t(rng, spec.nu));
                v[t] = a;
                e[t] = spec.innovation_kind == InnovationKind::gjr_only
                           ? u2
                           : u1 * target_sd + u2;  // components share one variance
            }
            break;
        }
    }

    std::vector<double> x(T + 1);
    x[0] = spec.mu_x;
    double w = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        w = phi * w + v[t];
        x[t] = spec.mu_x + w;
    }

    PredictiveDataset d;
    d.T = T;
    d.y.resize(T);
    d.x_lag.resize(T);
    d.x_level.resize(T);
    for (std::size_t t = 1; t <= T; ++t) {
        double yt = spec.gamma0 + e[t] + spec.gamma1 * x[t - 1];
        if (spec.b_identity)
            yt += e[t] * std::fabs(spec.zeta1 * x[t - 1] + spec.zeta2);
        d.y[t - 1] = yt;
        d.x_lag[t - 1] = x[t - 1];
        d.x_level[t - 1] = x[t];
    }
    return d;
}

// Quantile of the e innovation for the spec's kind; gjr mixtures fall back to
// a seeded one-shot simulation (used only for cell classification).
inline double innovation_quantile(const DgpSpec& spec, double tau) {
    if (tau <= 0.0 || tau >= 1.0) throw DomainError("innovation_quantile: tau outside (0,1)");
    switch (spec.innovation_kind) {
        case InnovationKind::gaussian:
            return normal_quantile(tau);
        case InnovationKind::student_t:
        case InnovationKind::t_only:
            return student_t_unit_quantile(tau, spec.nu);
        case InnovationKind::gjr_only:
        case InnovationKind::gjr_mix: {
            if (std::fabs(tau - 0.5) < 1e-12) return 0.0;  // symmetric mixture
            RngStream rng(stream_key(0x9DF1, rng_domain::dgp));
            dgp_detail::GjrState garch(spec.gjr);
            for (int b = 0; b < 500; ++b)
                garch.step(spec.gjr, dgp_detail::standardized_t(rng, spec.nu));
            const double target_sd = std::sqrt(spec.gjr.unconditional_variance());
            std::vector<double> draws(200000);
            for (auto& d : draws) {
                const double u2 = garch.step(spec.gjr, dgp_detail::standardized_t(rng, spec.nu));
                d = spec.innovation_kind == InnovationKind::gjr_only
                        ? u2
                        : dgp_detail::standardized_t(rng, spec.nu) * target_sd + u2;
            }
            return quantile_of(draws, tau);
        }
    }
    return 0.0;
}

// Population quantile slope under the spec, assuming zeta1 x + zeta2 > 0
// throughout: gamma1 + zeta1 * b(Q_e(tau)). Classifies null vs alternative
// cells in the experiment harness.
inline double population_quantile_slope(const DgpSpec& spec, double tau) {
    if (!spec.b_identity || spec.zeta1 == 0.0) return spec.gamma1;
    return spec.gamma1 + spec.zeta1 * innovation_quantile(spec, tau);
}

}  // namespace qpr

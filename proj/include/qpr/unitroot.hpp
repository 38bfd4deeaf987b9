#pragma once

// GLS-demeaned ADF statistic with BIC lag selection, and its inversion into
// a confidence interval for the local-to-unity parameter against simulated
// quantile curves.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/tables.hpp"

namespace qpr {

struct DfGlsResult {
    double t_stat = 0.0;
    double phi_hat = 0.0;  // 1 + level coefficient
    int lags = 0;
    std::size_t T = 0;
};

namespace ur_detail {

// Cholesky solve of a symmetric PD system; returns false when not PD.
inline bool chol_solve(std::vector<double>& g, std::size_t p,
                       std::vector<double>& rhs1, std::vector<double>& rhs2) {
    // g is row-major p x p, overwritten by the factor
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = g[i * p + j];
            for (std::size_t k = 0; k < i; ++k) s -= g[i * p + k] * g[j * p + k];
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) return false;
                g[i * p + i] = std::sqrt(s);
            } else {
                g[j * p + i] = s / g[i * p + i];
            }
        }
    }
    auto solve = [&](std::vector<double>& b) {
        for (std::size_t i = 0; i < p; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= g[i * p + k] * b[k];
            b[i] = s / g[i * p + i];
        }
        for (std::size_t ii = p; ii-- > 0;) {
            double s = b[ii];
            for (std::size_t k = ii + 1; k < p; ++k) s -= g[k * p + ii] * b[k];
            b[ii] = s / g[ii * p + ii];
        }
    };
    solve(rhs1);
    if (!rhs2.empty()) solve(rhs2);
    return true;
}

struct AdfFit {
    double rho = 0.0;
    double t = 0.0;
    double ssr = 0.0;
    std::size_t nobs = 0;
};

// ADF regression without deterministics on a (demeaned) series:
//   diff x_t = rho * x_{t-1} + sum b_j diff x_{t-j} + e_t
// over t in [t0, N). t0 must be >= k+1.
inline AdfFit adf_no_const(const std::vector<double>& x, int k, std::size_t t0) {
    const std::size_t N = x.size();
    const std::size_t p = static_cast<std::size_t>(k) + 1;
    const std::size_t n = N - t0;
    if (n <= p) throw SampleTooSmallError("adf: too few observations");

    auto reg = [&](std::size_t t, std::size_t j) -> double {
        return j == 0 ? x[t - 1] : x[t - j] - x[t - j - 1];
    };
    std::vector<double> gram(p * p, 0.0), xy(p, 0.0), e1(p, 0.0);
    for (std::size_t t = t0; t < N; ++t) {
        const double d = x[t] - x[t - 1];
        for (std::size_t i = 0; i < p; ++i) {
            const double ri = reg(t, i);
            xy[i] += ri * d;
            for (std::size_t j = i; j < p; ++j) gram[i * p + j] += ri * reg(t, j);
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < i; ++j) gram[i * p + j] = gram[j * p + i];

    std::vector<double> beta = xy;
    e1[0] = 1.0;
    std::vector<double> g = gram;
    if (!chol_solve(g, p, beta, e1))
        throw RankDeficiencyError("adf: singular regressor matrix");

    double ssr = 0.0;
    for (std::size_t t = t0; t < N; ++t) {
        double fit = 0.0;
        for (std::size_t i = 0; i < p; ++i) fit += beta[i] * reg(t, i);
        const double e = (x[t] - x[t - 1]) - fit;
        ssr += e * e;
    }
    const double sigma2 = ssr / static_cast<double>(n - p);
    AdfFit out;
    out.rho = beta[0];
    out.ssr = ssr;
    out.nobs = n;
    const double var_rho = sigma2 * e1[0];
    if (!(var_rho > 0.0)) throw RankDeficiencyError("adf: nonpositive coefficient variance");
    out.t = beta[0] / std::sqrt(var_rho);
    return out;
}

}  // namespace ur_detail

// GLS demeaning at cbar = -7 (intercept convention).
inline std::vector<double> gls_demean(const std::vector<double>& x, double cbar = -7.0) {
    const std::size_t N = x.size();
    const double abar = 1.0 + cbar / static_cast<double>(N);
    double dz = x[0], dd = 1.0;
    for (std::size_t t = 1; t < N; ++t) {
        const double d = 1.0 - abar;
        dz += d * (x[t] - abar * x[t - 1]);
        dd += d * d;
    }
    const double mu = dz / dd;
    std::vector<double> out(N);
    for (std::size_t t = 0; t < N; ++t) out[t] = x[t] - mu;
    return out;
}

inline int default_adf_lag_cap(std::size_t T) {
    return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(T) / 100.0, 0.25)));
}

// DF-GLS: ADF on the GLS-demeaned series, lag length by BIC over 0..max_lags
// on the common sample, t-statistic refit on the chosen lag's full sample.
inline DfGlsResult dfgls(const std::vector<double>& x, int max_lags) {
    const std::size_t N = x.size();
    if (N < 30) throw SampleTooSmallError("dfgls: need at least 30 observations");
    if (max_lags < 0) throw DomainError("dfgls: negative lag cap");
    max_lags = std::min<int>(max_lags, static_cast<int>(N) / 3);

    const auto xt = gls_demean(x);
    const std::size_t t0 = static_cast<std::size_t>(max_lags) + 1;
    int best_k = 0;
    double best_bic = 0.0;
    for (int k = 0; k <= max_lags; ++k) {
        const auto fit = ur_detail::adf_no_const(xt, k, t0);
        const double n = static_cast<double>(fit.nobs);
        const double bic = n * std::log(fit.ssr / n) +
                           static_cast<double>(k + 1) * std::log(n);
        if (k == 0 || bic < best_bic) {
            best_bic = bic;
            best_k = k;
        }
    }
    const auto fit = ur_detail::adf_no_const(xt, best_k, static_cast<std::size_t>(best_k) + 1);
    DfGlsResult out;
    out.t_stat = fit.t;
    out.phi_hat = 1.0 + fit.rho;
    out.lags = best_k;
    out.T = N;
    return out;
}

inline DfGlsResult dfgls(const std::vector<double>& x) {
    return dfgls(x, default_adf_lag_cap(x.size()));
}

// --- inversion -----------------------------------------------------------------

struct LocalToUnityCI {
    double c_lower = 0.0;
    double c_upper = 0.0;
    double alpha1 = 0.0;
    std::string source_table;
    bool clamped_lower = false;
    bool clamped_upper = false;
    bool empty_acceptance = false;  // degenerate interval at a grid edge
};

namespace ur_detail {

// Smallest c with curve(c) >= t (curve nondecreasing); +inf when none.
inline double first_crossing(const std::vector<double>& c, const std::vector<double>& q,
                             double t, bool& clamped) {
    clamped = false;
    if (t <= q.front()) {
        clamped = true;
        return c.front();
    }
    if (t > q.back()) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < q.size(); ++i) {
        if (q[i] >= t) {
            if (q[i] == q[i - 1]) return c[i - 1];
            return c[i - 1] + (t - q[i - 1]) / (q[i] - q[i - 1]) * (c[i] - c[i - 1]);
        }
    }
    return std::numeric_limits<double>::infinity();
}

// Largest c with curve(c) <= t; -inf when none.
inline double last_crossing(const std::vector<double>& c, const std::vector<double>& q,
                            double t, bool& clamped) {
    clamped = false;
    if (t >= q.back()) {
        clamped = true;
        return c.back();
    }
    if (t < q.front()) return -std::numeric_limits<double>::infinity();
    for (std::size_t i = q.size(); i-- > 1;) {
        if (q[i - 1] <= t) {
            if (q[i] == q[i - 1]) return c[i];
            return c[i - 1] + (t - q[i - 1]) / (q[i] - q[i - 1]) * (c[i] - c[i - 1]);
        }
    }
    return -std::numeric_limits<double>::infinity();
}

}  // namespace ur_detail

// Acceptance-region inversion: CI = {c : q_{a/2}(c) <= t_obs <= q_{1-a/2}(c)}.
// Both quantile curves increase in c, so the set is an interval; an empty set
// collapses onto the nearest grid endpoint with the clamp flags raised.
inline LocalToUnityCI stock_ci(const DfGlsResult& r, double alpha1,
                               const CriticalValueTable& table,
                               const std::string& table_id = "dfgls_quantiles") {
    if (alpha1 <= 0.0 || alpha1 >= 1.0) throw DomainError("stock_ci: alpha1 outside (0,1)");
    const auto q_hi = dfgls_curve(table, 1.0 - alpha1 / 2.0);
    const auto q_lo = dfgls_curve(table, alpha1 / 2.0);
    const auto& c = table.c_grid;

    LocalToUnityCI ci;
    ci.alpha1 = alpha1;
    ci.source_table = table_id;

    bool clamp_lo = false, clamp_hi = false;
    double lo = ur_detail::first_crossing(c, q_hi, r.t_stat, clamp_lo);
    double hi = ur_detail::last_crossing(c, q_lo, r.t_stat, clamp_hi);

    if (!std::isfinite(lo)) {  // t above every upper quantile
        ci.c_lower = c.back();
        ci.c_upper = c.back();
        ci.clamped_lower = ci.clamped_upper = true;
        ci.empty_acceptance = true;
        return ci;
    }
    if (!std::isfinite(hi)) {  // t below every lower quantile
        ci.c_lower = c.front();
        ci.c_upper = c.front();
        ci.clamped_lower = ci.clamped_upper = true;
        ci.empty_acceptance = true;
        return ci;
    }
    if (lo > hi) {  // curves disagree within resolution
        const double mid = 0.5 * (lo + hi);
        lo = hi = mid;
        ci.empty_acceptance = true;
    }
    ci.c_lower = lo;
    ci.c_upper = hi;
    ci.clamped_lower = clamp_lo;
    ci.clamped_upper = clamp_hi;
    return ci;
}

}  // namespace qpr

#pragma once

// The fully modified slope estimator, its Bonferroni scan over a first-stage
// interval for the local-to-unity parameter, the switching decision rule,
// and the inverted confidence interval for the slope.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/longrun.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/series.hpp"
#include "qpr/tables.hpp"
#include "qpr/unitroot.hpp"

namespace qpr {

// Candidate local-to-unity values above this are never scanned.
constexpr double kExplosiveCap = 4.0;

struct FmPoint {
    double c_star = 0.0;
    double gamma1_plus = 0.0;
    double se_plus = 0.0;
    double t_plus = 0.0;
};

namespace fm_detail {

// Sufficient statistics making gamma1_plus affine in c*:
//   gamma1_plus(c*) = gamma1 - K (S0 - T lambda) + K (c*/T) Sxx
// with K = omega_psi delta / (omega_v f_hat Sxx) and Sxx = sum (x^mu)^2.
struct FmAffine {
    double gamma1 = 0.0;
    double intercept = 0.0;  // gamma1_plus at c* = 0
    double slope = 0.0;      // d gamma1_plus / d c*
    double se_plus = 0.0;

    double gamma1_plus(double c_star) const { return intercept + slope * c_star; }
    double t_plus(double c_star) const { return gamma1_plus(c_star) / se_plus; }
};

inline FmAffine fm_affine(const QuantileFit& fit, const PredictiveDataset& data,
                          const LongRunEstimates& lr) {
    if (std::fabs(lr.delta_tau) >= 1.0)
        throw SandwichError("fm_point: |delta_tau| = 1 leaves no residual variance");
    const std::size_t T = data.T;
    const auto xmu = demean(data.x_lag);
    double sxx = 0.0, s0 = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        sxx += xmu[t] * xmu[t];
        s0 += xmu[t] * (data.x_level[t] - data.x_lag[t]);
    }
    if (!(sxx > 0.0)) throw RankDeficiencyError("fm_point: predictor has no variation");

    const double omega_psi = std::sqrt(lr.omega_psi2);
    const double omega_v = std::sqrt(lr.omega_v2);
    const double k = omega_psi * lr.delta_tau / (omega_v * fit.f_hat * sxx);

    FmAffine a;
    a.gamma1 = fit.gamma1;
    a.intercept = fit.gamma1 - k * (s0 - static_cast<double>(T) * lr.lambda_vv);
    a.slope = k * sxx / static_cast<double>(T);
    const double omega_psi_v = omega_psi * std::sqrt(1.0 - lr.delta_tau * lr.delta_tau);
    a.se_plus = omega_psi_v / (fit.f_hat * std::sqrt(sxx));
    if (!(a.se_plus > 0.0)) throw SandwichError("fm_point: nonpositive standard error");
    return a;
}

}  // namespace fm_detail

// Fully modified slope at one candidate c*: removes the estimated
// endogeneity bias through x_t - phi x_{t-1} with phi = 1 + c*/T.
inline FmPoint fm_point(const QuantileFit& fit, const PredictiveDataset& data,
                        const LongRunEstimates& lr, double c_star) {
    const auto a = fm_detail::fm_affine(fit, data, lr);
    FmPoint p;
    p.c_star = c_star;
    p.gamma1_plus = a.gamma1_plus(c_star);
    p.se_plus = a.se_plus;
    p.t_plus = p.gamma1_plus / p.se_plus;
    return p;
}

// FM points on a uniform grid over the first-stage interval, endpoints always
// included, candidates capped at kExplosiveCap. t_plus is affine in c*, so
// the extrema sit at the endpoints; the grid is insurance and exposition.
inline std::vector<FmPoint> bonferroni_scan(const QuantileFit& fit, const PredictiveDataset& data,
                                            const LongRunEstimates& lr, const LocalToUnityCI& ci,
                                            double grid_step = 0.25) {
    if (grid_step <= 0.0) throw DomainError("bonferroni_scan: grid step must be positive");
    const auto a = fm_detail::fm_affine(fit, data, lr);
    const double lo = std::min(ci.c_lower, kExplosiveCap);
    const double hi = std::min(ci.c_upper, kExplosiveCap);
    std::vector<FmPoint> pts;
    const double width = hi - lo;
    const auto steps = width > 0.0 ? static_cast<std::size_t>(std::ceil(width / grid_step)) : 0;
    pts.reserve(steps + 1);
    for (std::size_t i = 0; i <= steps; ++i) {
        const double c = i == steps ? hi : lo + static_cast<double>(i) * grid_step;
        FmPoint p;
        p.c_star = c;
        p.gamma1_plus = a.gamma1_plus(c);
        p.se_plus = a.se_plus;
        p.t_plus = p.gamma1_plus / p.se_plus;
        pts.push_back(p);
    }
    return pts;
}

enum class SwitchBranch { bonferroni_only, intersection, t_only };

inline const char* branch_name(SwitchBranch b) {
    switch (b) {
        case SwitchBranch::bonferroni_only: return "bonferroni_only";
        case SwitchBranch::intersection: return "intersection";
        case SwitchBranch::t_only: return "t_only";
    }
    return "?";
}

struct SwitchingFMResult {
    double tau = 0.0;
    SwitchBranch branch_right = SwitchBranch::bonferroni_only;
    SwitchBranch branch_left = SwitchBranch::bonferroni_only;
    bool reject_right = false;
    bool reject_left = false;
    LocalToUnityCI ci_right;  // first-stage interval at alpha1_high
    LocalToUnityCI ci_left;   // first-stage interval at alpha1_low
    std::vector<FmPoint> bonferroni_points;  // scan over the right-tail interval
    HacTStat hac;
    double critical_right = 0.0;  // z_{1-alpha2/2}(c_bar_L)
    double gamma1_lower = 0.0;
    double gamma1_upper = 0.0;
    SwitchThresholds thresholds;
    double delta_tau = 0.0;
    double alpha1_low = 0.0;   // left-tail first-stage level
    double alpha1_high = 0.0;  // right-tail first-stage level
    DfGlsResult dfgls;
    std::vector<std::string> warnings;
};

struct SwitchingTables {
    const CriticalValueTable* z = nullptr;
    const CriticalValueTable* dfgls = nullptr;
    const CriticalValueTable* alpha1 = nullptr;

    void require_complete() const {
        if (!z || !dfgls || !alpha1)
            throw TableError("switching_test: z, dfgls and alpha1 tables are all required");
    }
};

namespace fm_detail {

struct TailDecision {
    SwitchBranch branch;
    bool reject;
    double gamma_bound;  // lower bound (right tail) or upper bound (left tail)
};

// Right tail: reject when the worst-case FM t over the interval clears
// z_{1-a/2}; switch to the plain HAC t against z_{1-a/2}(c_bar_L) when the
// interval sits below the threshold, intersect when it straddles.
inline TailDecision right_tail(const FmAffine& a, const LocalToUnityCI& ci, double threshold,
                               double z_fm, double z_t, const HacTStat& hac) {
    const double lo = std::min(ci.c_lower, kExplosiveCap);
    const double hi = std::min(ci.c_upper, kExplosiveCap);
    const double t_min = std::min(a.t_plus(lo), a.t_plus(hi));
    const double fm_bound = std::min(a.gamma1_plus(lo), a.gamma1_plus(hi)) - z_fm * a.se_plus;
    const double t_bound = hac.gamma1_hat - z_t * hac.se;

    TailDecision d{};
    if (ci.c_lower > threshold) {
        d.branch = SwitchBranch::bonferroni_only;
        d.reject = t_min >= z_fm;
        d.gamma_bound = fm_bound;
    } else if (ci.c_upper < threshold) {
        d.branch = SwitchBranch::t_only;
        d.reject = hac.t_value >= z_t;
        d.gamma_bound = t_bound;
    } else {
        d.branch = SwitchBranch::intersection;
        d.reject = (t_min >= z_fm) && (hac.t_value >= z_t);
        d.gamma_bound = std::min(fm_bound, t_bound);
    }
    return d;
}

// Left tail: the standard-normal quantile serves both branches.
inline TailDecision left_tail(const FmAffine& a, const LocalToUnityCI& ci, double threshold,
                              double z_low, const HacTStat& hac) {
    const double lo = std::min(ci.c_lower, kExplosiveCap);
    const double hi = std::min(ci.c_upper, kExplosiveCap);
    const double t_max = std::max(a.t_plus(lo), a.t_plus(hi));
    const double fm_bound = std::max(a.gamma1_plus(lo), a.gamma1_plus(hi)) - z_low * a.se_plus;
    const double t_bound = hac.gamma1_hat - z_low * hac.se;

    TailDecision d{};
    if (ci.c_lower > threshold) {
        d.branch = SwitchBranch::bonferroni_only;
        d.reject = t_max <= z_low;
        d.gamma_bound = fm_bound;
    } else if (ci.c_upper < threshold) {
        d.branch = SwitchBranch::t_only;
        d.reject = hac.t_value <= z_low;
        d.gamma_bound = t_bound;
    } else {
        d.branch = SwitchBranch::intersection;
        d.reject = (t_max <= z_low) && (hac.t_value <= z_low);
        d.gamma_bound = std::max(fm_bound, t_bound);
    }
    return d;
}

}  // namespace fm_detail

struct SwitchingOptions {
    double grid_step = 0.25;
    int dfgls_max_lags = -1;  // <0: default cap from the sample size
};

// Full pipeline for one quantile level: fit, long-run estimates, adjusted
// first-stage intervals per tail, branch decisions, and the inverted slope
// interval. Estimation fallbacks annotate the result instead of aborting.
inline SwitchingFMResult switching_test(const PredictiveDataset& data, double tau,
                                        const SwitchingTables& tables,
                                        const SwitchThresholds& thresholds = {},
                                        SwitchingOptions opts = {}) {
    tables.require_complete();
    SwitchingFMResult r;
    r.tau = tau;
    r.thresholds = thresholds;

    const auto fit = solve_qr(data, tau);
    const auto lr = estimate_longrun(fit, data);
    if (lr.prewhitening_failed)
        r.warnings.push_back("prewhitening failed; plain long-run covariance used");
    if (lr.floor_events > 0)
        r.warnings.push_back("covariance eigenvalues floored " +
                             std::to_string(lr.floor_events) + " time(s)");
    r.delta_tau = lr.delta_tau;
    r.hac = hac_t(fit, data, lr);

    const auto [a_low, a_high] = lookup_alpha1(*tables.alpha1, lr.delta_tau);
    r.alpha1_low = a_low;
    r.alpha1_high = a_high;

    const auto x = data.predictor_path();
    const int cap = opts.dfgls_max_lags >= 0 ? opts.dfgls_max_lags
                                             : default_adf_lag_cap(x.size());
    r.dfgls = dfgls(x, cap);
    r.ci_right = stock_ci(r.dfgls, a_high, *tables.dfgls);
    r.ci_left = stock_ci(r.dfgls, a_low, *tables.dfgls);

    const double alpha2 = thresholds.alpha2;
    const double z_hi = normal_quantile(1.0 - alpha2 / 2.0);
    const double z_lo = normal_quantile(alpha2 / 2.0);
    r.critical_right = z_quantile(*tables.z, thresholds.c_bar_L, -1.0, 1.0 - alpha2 / 2.0);

    const auto affine = fm_detail::fm_affine(fit, data, lr);
    const auto right = fm_detail::right_tail(affine, r.ci_right, thresholds.c_bar_L,
                                             z_hi, r.critical_right, r.hac);
    const auto left = fm_detail::left_tail(affine, r.ci_left, thresholds.c_under_L,
                                           z_lo, r.hac);

    r.branch_right = right.branch;
    r.branch_left = left.branch;
    r.reject_right = right.reject;
    r.reject_left = left.reject;
    r.gamma1_lower = right.gamma_bound;
    r.gamma1_upper = left.gamma_bound;
    r.bonferroni_points = bonferroni_scan(fit, data, lr, r.ci_right, opts.grid_step);
    return r;
}

// Two-tailed decision: reject when exactly one tail fires.
inline bool two_sided_reject(const SwitchingFMResult& r) {
    return (r.reject_right ? 1 : 0) + (r.reject_left ? 1 : 0) == 1;
}

}  // namespace qpr

#pragma once

// Monte Carlo generation of every lookup table: percentiles of the
// near-unit-root t limit, DF-GLS statistic quantiles across c, and the
// first-stage level calibration. Replications use counter-based streams and
// a full gather before quantile extraction, so identical inputs give
// bit-identical tables at any thread count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/fmtest.hpp"
#include "qpr/longrun.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/parallel.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/rng.hpp"
#include "qpr/series.hpp"
#include "qpr/tables.hpp"
#include "qpr/unitroot.hpp"

namespace qpr {

struct GenOptions {
    unsigned threads = 0;  // 0: hardware concurrency
};

// Default grids. The c grid for the statistic percentile table includes the
// switching thresholds; the DF-GLS grid is denser near zero where the
// quantile curves bend hardest.
inline std::vector<double> default_z_c_grid() {
    return {-190, -160, -130, -120, -110, -100, -90, -80, -70, -60,
            -50, -40, -30, -20, -10, -5, 0, 5};
}
inline std::vector<double> default_z_delta_grid() { return {-1.0, -0.9, -0.6, -0.3, 0.0}; }
inline std::vector<double> default_z_alpha_grid() {
    return {0.01, 0.025, 0.03, 0.05, 0.10, 0.50, 0.90, 0.95, 0.97, 0.975, 0.99};
}
inline std::vector<double> default_dfgls_c_grid() {
    std::vector<double> g;
    for (int c = -250; c <= -60; c += 10) g.push_back(c);
    for (int c = -58; c <= 4; c += 2) g.push_back(c);
    return g;
}
inline std::vector<double> default_dfgls_alpha_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 199; ++i) g.push_back(static_cast<double>(i) * 0.005);
    return g;
}
inline std::vector<double> default_delta_tau_grid() {
    return {-0.797, -0.758, -0.718, -0.678, -0.638, -0.598, -0.558, -0.518,
            -0.478, -0.439, -0.399, -0.359, -0.319, -0.279, -0.239, -0.199,
            -0.159, -0.119, -0.080, -0.040};
}
inline std::vector<double> default_calibration_c_grid() {
    return {-120, -100, -80, -60, -40, -30, -20, -15, -10, -5, -2, 0, 4};
}

namespace gen_detail {

// One local-to-unity path draw; returns the demeaned-regressor t functional
//   D = sum x^mu_{t-1} v_t / sqrt(sum (x^mu_{t-1})^2).
inline double simulate_d_stat(RngStream& rng, long sim_T,
                              double c, std::vector<double>& xbuf, std::vector<double>& vbuf) {
    const double phi = 1.0 + c / static_cast<double>(sim_T);
    xbuf.resize(static_cast<std::size_t>(sim_T) + 1);
    vbuf.resize(static_cast<std::size_t>(sim_T));
    xbuf[0] = 0.0;
    double sum_lag = 0.0;
    for (long t = 1; t <= sim_T; ++t) {
        const double v = rng.normal();
        vbuf[t - 1] = v;
        xbuf[t] = phi * xbuf[t - 1] + v;
        sum_lag += xbuf[t - 1];
    }
    const double xbar = sum_lag / static_cast<double>(sim_T);
    double num = 0.0, den = 0.0;
    for (long t = 1; t <= sim_T; ++t) {
        const double xm = xbuf[t - 1] - xbar;
        num += xm * vbuf[t - 1];
        den += xm * xm;
    }
    return num / std::sqrt(den);
}

}  // namespace gen_detail

// Empirical percentiles of delta*D + sqrt(1-delta^2)*Z for one (c, delta).
inline std::vector<double> simulate_z_percentile(double c, double delta,
                                                 const std::vector<double>& alphas,
                                                 long sim_T, long reps, std::uint64_t seed,
                                                 std::size_t c_index = 0,
                                                 std::size_t delta_index = 0,
                                                 unsigned threads = 0) {
    if (std::fabs(delta) > 1.0) throw DomainError("simulate_z_percentile: |delta| > 1");
    if (sim_T < 500) throw DomainError("simulate_z_percentile: sim_T below 500");
    if (reps < 10000) throw DomainError("simulate_z_percentile: need at least 10000 replications");

    std::vector<double> stats(static_cast<std::size_t>(reps));
    const double mix = std::sqrt(1.0 - delta * delta);
    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
        thread_local std::vector<double> xbuf, vbuf;
        RngStream rng(stream_key(seed, rng_domain::z_table, c_index, delta_index, rep));
        const double d = gen_detail::simulate_d_stat(rng, sim_T, c, xbuf, vbuf);
        const double z = rng.normal();
        stats[rep] = delta * d + mix * z;
    });
    std::sort(stats.begin(), stats.end());
    std::vector<double> out;
    out.reserve(alphas.size());
    for (double a : alphas) out.push_back(quantile_sorted(stats, a));
    return out;
}

inline CriticalValueTable build_z_table(std::vector<double> c_grid,
                                        std::vector<double> delta_grid,
                                        std::vector<double> alphas, long sim_T, long reps,
                                        std::uint64_t seed, GenOptions opts = {}) {
    std::sort(c_grid.begin(), c_grid.end());
    std::sort(delta_grid.begin(), delta_grid.end());
    std::sort(alphas.begin(), alphas.end());
    CriticalValueTable t;
    t.kind = TableKind::z_percentiles;
    t.c_grid = c_grid;
    t.delta_grid = delta_grid;
    t.alpha_grid = alphas;
    t.sim_T = sim_T;
    t.replications = reps;
    t.seed = seed;
    t.values.resize(t.row_count() * t.row_width());
    for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
        for (std::size_t di = 0; di < delta_grid.size(); ++di) {
            const auto q = simulate_z_percentile(c_grid[ci], delta_grid[di], alphas,
                                                 sim_T, reps, seed, ci, di, opts.threads);
            std::copy(q.begin(), q.end(),
                      t.values.begin() + static_cast<long>((ci * delta_grid.size() + di) * alphas.size()));
        }
    }
    validate_table(t);
    return t;
}

// DF-GLS statistic quantiles per grid c (lag 0: innovations are iid here),
// isotonic-smoothed across c at every level.
inline CriticalValueTable simulate_dfgls_quantiles(std::vector<double> c_grid,
                                                   std::vector<double> alphas, long sim_T,
                                                   long reps, std::uint64_t seed,
                                                   GenOptions opts = {}) {
    if (sim_T < 500) throw DomainError("simulate_dfgls_quantiles: sim_T below 500");
    if (reps < 10000) throw DomainError("simulate_dfgls_quantiles: need at least 10000 replications");
    std::sort(c_grid.begin(), c_grid.end());
    std::sort(alphas.begin(), alphas.end());

    CriticalValueTable t;
    t.kind = TableKind::dfgls_quantiles;
    t.c_grid = c_grid;
    t.alpha_grid = alphas;
    t.sim_T = sim_T;
    t.replications = reps;
    t.seed = seed;
    t.values.resize(t.row_count() * t.row_width());

    std::vector<double> stats(static_cast<std::size_t>(reps));
    for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
        const double c = c_grid[ci];
        parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t rep) {
            RngStream rng(stream_key(seed, rng_domain::dfgls_table, ci, 0, rep));
            std::vector<double> x(static_cast<std::size_t>(sim_T) + 1);
            const double phi = 1.0 + c / static_cast<double>(sim_T);
            x[0] = 0.0;
            for (long s = 1; s <= sim_T; ++s)
                x[s] = phi * x[s - 1] + rng.normal();
            const auto xt = gls_demean(x);
            stats[rep] = ur_detail::adf_no_const(xt, 0, 1).t;
        });
        std::sort(stats.begin(), stats.end());
        for (std::size_t ai = 0; ai < alphas.size(); ++ai)
            t.values[ci * alphas.size() + ai] = quantile_sorted(stats, alphas[ai]);
    }
    // isotonic smoothing across c, per level
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        std::vector<double> curve(c_grid.size());
        for (std::size_t ci = 0; ci < c_grid.size(); ++ci)
            curve[ci] = t.values[ci * alphas.size() + ai];
        curve = isotonic_increasing(curve);
        for (std::size_t ci = 0; ci < c_grid.size(); ++ci)
            t.values[ci * alphas.size() + ai] = curve[ci];
    }
    validate_table(t);
    return t;
}

// Worst |deviation| / MC standard error of the delta = 0 rows against exact
// standard-normal quantiles; the generator's embedded self-check.
inline double z_table_self_check(const CriticalValueTable& t) {
    table_detail::require(t.kind == TableKind::z_percentiles, "z_table_self_check: wrong kind");
    double worst = 0.0;
    const std::size_t nd = t.delta_grid.size();
    const std::size_t w = t.alpha_grid.size();
    const std::size_t di = table_detail::exact_index(t.delta_grid, 0.0, "delta=0 row");
    for (std::size_t ci = 0; ci < t.c_grid.size(); ++ci) {
        for (std::size_t ai = 0; ai < w; ++ai) {
            const double p = t.alpha_grid[ai];
            const double q = normal_quantile(p);
            const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(t.replications)) /
                              normal_pdf(q);
            const double dev = std::fabs(t.values[(ci * nd + di) * w + ai] - q);
            worst = std::max(worst, dev / se);
        }
    }
    return worst;
}

// --- first-stage level calibration ---------------------------------------------

namespace gen_detail {

// Per-replication sufficient statistics for evaluating the switching test at
// any candidate first-stage level: the FM t is affine in c*.
struct CalibRep {
    double t_dfgls = 0.0;
    double t_intercept = 0.0;  // t_plus(c*) = t_intercept + t_slope * c*
    double t_slope = 0.0;
    double t_hac = 0.0;
    bool ok = false;
};

}  // namespace gen_detail

struct CalibrationResult {
    CriticalValueTable table;
    std::vector<double> failed_rows;  // delta_tau values with no feasible level
};

// Scans the first-stage level grid for each delta_tau so that the switching
// test, run with the slack-adjusted level alpha2 - epsilon, rejects at most
// (alpha2 - epsilon)/2 at every c in the calibration grid, picking the
// largest level that complies (separately per tail).
inline CalibrationResult calibrate_alpha1(const std::vector<double>& delta_tau_grid,
                                          const SwitchThresholds& thresholds,
                                          const CriticalValueTable& z_table,
                                          const CriticalValueTable& dfgls_table,
                                          long sim_T, long reps, std::uint64_t seed,
                                          std::vector<double> c_grid = {},
                                          GenOptions opts = {}) {
    if (c_grid.empty()) c_grid = default_calibration_c_grid();
    std::sort(c_grid.begin(), c_grid.end());

    const double alpha2_t = thresholds.alpha2 - thresholds.epsilon;
    if (alpha2_t <= 0.0) throw DomainError("calibrate_alpha1: epsilon >= alpha2");
    const double bound = alpha2_t / 2.0;
    const double z_fm_hi = normal_quantile(1.0 - alpha2_t / 2.0);
    const double z_fm_lo = normal_quantile(alpha2_t / 2.0);
    const double z_t_hi = z_quantile(z_table, thresholds.c_bar_L, -1.0, 1.0 - alpha2_t / 2.0);

    // level scan grid and the matching inversion curves
    std::vector<double> levels;
    for (int i = 1; i <= 98; ++i) levels.push_back(static_cast<double>(i) * 0.01);
    std::vector<std::vector<double>> q_lo(levels.size()), q_hi(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
        q_lo[k] = dfgls_curve(dfgls_table, levels[k] / 2.0);
        q_hi[k] = dfgls_curve(dfgls_table, 1.0 - levels[k] / 2.0);
    }
    const auto& inv_c = dfgls_table.c_grid;

    CriticalValueTable t;
    t.kind = TableKind::alpha1_levels;
    t.delta_grid = delta_tau_grid;
    std::sort(t.delta_grid.begin(), t.delta_grid.end());
    t.alpha_grid = {levels.front(), levels.back()};
    t.sim_T = sim_T;
    t.replications = reps;
    t.seed = seed;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", thresholds.c_bar_L);
    t.extras["c_bar_L"] = buf;
    std::snprintf(buf, sizeof buf, "%.10g", thresholds.c_under_L);
    t.extras["c_under_L"] = buf;
    std::snprintf(buf, sizeof buf, "%.10g", thresholds.alpha2);
    t.extras["alpha2"] = buf;
    std::snprintf(buf, sizeof buf, "%.10g", thresholds.epsilon);
    t.extras["epsilon"] = buf;
    t.extras["calibration_c_grid"] = table_detail::join_grid(c_grid);
    t.values.assign(t.row_count() * 4, 0.0);

    CalibrationResult result;

    const int lag_cap = default_adf_lag_cap(static_cast<std::size_t>(sim_T) + 1);
    for (std::size_t row = 0; row < t.delta_grid.size(); ++row) {
        const double delta_tau = t.delta_grid[row];
        const double delta = std::clamp(delta_tau * std::sqrt(M_PI / 2.0), -0.9999, 0.9999);

        // gather per-(c, rep) sufficient statistics
        const std::size_t nc = c_grid.size();
        const std::size_t nrep = static_cast<std::size_t>(reps);
        std::vector<gen_detail::CalibRep> cell(nc * nrep);
        parallel_for(nc * nrep, opts.threads, [&](std::size_t idx) {
            const std::size_t ci = idx / nrep;
            const std::size_t rep = idx % nrep;
            RngStream rng(stream_key(seed, rng_domain::alpha1_table, row, ci, rep));
            const std::size_t T = static_cast<std::size_t>(sim_T);
            const double phi = 1.0 + c_grid[ci] / static_cast<double>(sim_T);
            PredictiveDataset data;
            data.T = T;
            data.y.resize(T);
            data.x_lag.resize(T);
            data.x_level.resize(T);
            double x_prev = 0.0;
            for (std::size_t s = 0; s < T; ++s) {
                const auto [v, u] = rng.correlated_normals(delta);
                const double x_now = phi * x_prev + v;
                data.y[s] = u;
                data.x_lag[s] = x_prev;
                data.x_level[s] = x_now;
                x_prev = x_now;
            }
            gen_detail::CalibRep r;
            try {
                const auto fit = solve_qr(data, 0.5);
                const auto lr = estimate_longrun(fit, data);
                const auto affine = fm_detail::fm_affine(fit, data, lr);
                r.t_intercept = affine.gamma1_plus(0.0) / affine.se_plus;
                r.t_slope = affine.slope / affine.se_plus;
                r.t_hac = hac_t(fit, data, lr).t_value;
                r.t_dfgls = dfgls(data.predictor_path(), lag_cap).t_stat;
                r.ok = true;
            } catch (const std::exception&) {
                r.ok = false;
            }
            cell[idx] = r;
        });

        // evaluate every candidate level against the worst c
        auto worst_rejection = [&](std::size_t k, bool right_tail) {
            double worst = 0.0;
            for (std::size_t ci = 0; ci < nc; ++ci) {
                long rej = 0, ok = 0;
                for (std::size_t rep = 0; rep < nrep; ++rep) {
                    const auto& r = cell[ci * nrep + rep];
                    if (!r.ok) continue;
                    ++ok;
                    bool cl = false, cu = false;
                    double lo = ur_detail::first_crossing(inv_c, q_hi[k], r.t_dfgls, cl);
                    double hi = ur_detail::last_crossing(inv_c, q_lo[k], r.t_dfgls, cu);
                    if (!std::isfinite(lo)) lo = hi = inv_c.back();
                    else if (!std::isfinite(hi)) lo = hi = inv_c.front();
                    else if (lo > hi) lo = hi = 0.5 * (lo + hi);
                    const double clo = std::min(lo, kExplosiveCap);
                    const double chi = std::min(hi, kExplosiveCap);
                    const double ta = r.t_intercept + r.t_slope * clo;
                    const double tb = r.t_intercept + r.t_slope * chi;
                    bool reject;
                    if (right_tail) {
                        const double t_min = std::min(ta, tb);
                        const bool fm = t_min >= z_fm_hi;
                        const bool tt = r.t_hac >= z_t_hi;
                        if (lo > thresholds.c_bar_L) reject = fm;
                        else if (hi < thresholds.c_bar_L) reject = tt;
                        else reject = fm && tt;
                    } else {
                        const double t_max = std::max(ta, tb);
                        const bool fm = t_max <= z_fm_lo;
                        const bool tt = r.t_hac <= z_fm_lo;
                        if (lo > thresholds.c_under_L) reject = fm;
                        else if (hi < thresholds.c_under_L) reject = tt;
                        else reject = fm && tt;
                    }
                    if (reject) ++rej;
                }
                if (ok > 0)
                    worst = std::max(worst, static_cast<double>(rej) / static_cast<double>(ok));
            }
            return worst;
        };

        double pick_hi = -1.0, pick_lo = -1.0, worst_hi = 0.0, worst_lo = 0.0;
        for (std::size_t k = levels.size(); k-- > 0;) {
            if (pick_hi < 0.0) {
                const double w = worst_rejection(k, true);
                if (w <= bound) {
                    pick_hi = levels[k];
                    worst_hi = w;
                }
            }
            if (pick_lo < 0.0) {
                const double w = worst_rejection(k, false);
                if (w <= bound) {
                    pick_lo = levels[k];
                    worst_lo = w;
                }
            }
            if (pick_hi >= 0.0 && pick_lo >= 0.0) break;
        }
        if (pick_hi < 0.0 || pick_lo < 0.0) {
            result.failed_rows.push_back(delta_tau);
            pick_hi = std::max(pick_hi, 0.0);
            pick_lo = std::max(pick_lo, 0.0);
        }
        t.values[row * 4 + 0] = pick_lo;
        t.values[row * 4 + 1] = pick_hi;
        t.values[row * 4 + 2] = worst_lo;
        t.values[row * 4 + 3] = worst_hi;
    }
    if (!result.failed_rows.empty())
        t.extras["calibration_failures"] = table_detail::join_grid(result.failed_rows);
    validate_table(t);
    result.table = std::move(t);
    return result;
}

}  // namespace qpr

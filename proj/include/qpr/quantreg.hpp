#pragma once

// Quantile regression of y_t on (1, x_{t-1}): check-loss minimization via a
// Frisch-Newton interior point on the dual box LP, plus the residual score
// sequence and the kernel estimate of the residual density at zero.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/series.hpp"

namespace qpr {

inline double psi_score(double u, double tau) { return u < 0.0 ? tau - 1.0 : tau; }

inline double check_loss(double u, double tau) {
    if (tau <= 0.0 || tau >= 1.0) throw DomainError("check_loss: tau outside (0,1)");
    return u * psi_score(u, tau);
}

struct QuantileFit {
    double tau = 0.0;
    double gamma0 = 0.0;
    double gamma1 = 0.0;
    std::vector<double> residuals;  // y_t - gamma0 - gamma1 * x_{t-1}
    std::vector<double> psi;        // tau - I(residual < 0); psi(0) = tau
    double f_hat = 0.0;             // residual density at zero
    double bandwidth_h = 0.0;
    double objective = 0.0;         // attained check-loss sum
    int iterations = 0;
};

// Non-convergence within the iteration cap; carries the best iterate found.
class QrConvergenceError : public std::runtime_error {
public:
    QrConvergenceError(const std::string& what, QuantileFit best_iterate)
        : std::runtime_error(what), best(std::move(best_iterate)) {}
    QuantileFit best;
};

namespace qr_detail {

// Coefficients solving min sum rho_tau(y - X b) for an n x p design with
// p in {1, 2}. Mehrotra predictor-corrector on the dual:
//   max y'a  s.t.  X'a = (1-tau) X'1,  0 <= a <= 1,
// whose equality multipliers are -b. Initial a = (1-tau)1 is exactly
// feasible, so primal feasibility is preserved throughout.
struct IpResult {
    std::vector<double> beta;
    double gap = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline IpResult solve_box_lp(const std::vector<std::vector<double>>& cols,
                             const std::vector<double>& y, double tau,
                             double tol, int max_iter) {
    const std::size_t n = y.size();
    const std::size_t p = cols.size();
    const double fff = 0.9995;

    auto solve_normal = [&](const std::vector<double>& d, const std::vector<double>& rhs_n,
                            std::vector<double>& eta_step) {
        // M = X' diag(d) X (p x p), rhs = X' diag(d) rhs_n
        if (p == 1) {
            double m = 0.0, r = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                m += d[i] * cols[0][i] * cols[0][i];
                r += d[i] * cols[0][i] * rhs_n[i];
            }
            if (!(m > 0.0) || !std::isfinite(m))
                throw RankDeficiencyError("solve_qr: degenerate design");
            eta_step[0] = r / m;
        } else {
            double m11 = 0.0, m12 = 0.0, m22 = 0.0, r1 = 0.0, r2 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double di = d[i];
                const double x1 = cols[0][i], x2 = cols[1][i];
                m11 += di * x1 * x1;
                m12 += di * x1 * x2;
                m22 += di * x2 * x2;
                r1 += di * x1 * rhs_n[i];
                r2 += di * x2 * rhs_n[i];
            }
            const double det = m11 * m22 - m12 * m12;
            if (!(det > 0.0) || !std::isfinite(det) ||
                det <= 1e-14 * std::max(1.0, m11 * m22))
                throw RankDeficiencyError("solve_qr: rank-deficient design (constant predictor?)");
            eta_step[0] = (m22 * r1 - m12 * r2) / det;
            eta_step[1] = (m11 * r2 - m12 * r1) / det;
        }
    };

    // least-squares start for the multipliers
    std::vector<double> eta(p, 0.0);
    {
        std::vector<double> ones(n, 1.0);
        std::vector<double> b_ls(p, 0.0);
        solve_normal(ones, y, b_ls);
        for (std::size_t k = 0; k < p; ++k) eta[k] = -b_ls[k];
    }

    std::vector<double> a(n, 1.0 - tau), s(n, tau), z(n), w(n);
    double scale = 0.0;
    {
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t k = 0; k < p; ++k) fit += cols[k][i] * (-eta[k]);
            const double u = y[i] - fit;
            scale += std::fabs(u);
        }
        scale = scale / static_cast<double>(n) + 1e-12;
        const double eps0 = 1e-4 * scale;
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t k = 0; k < p; ++k) fit += cols[k][i] * (-eta[k]);
            const double u = y[i] - fit;
            z[i] = std::max(-u, 0.0) + eps0;
            w[i] = std::max(u, 0.0) + eps0;
        }
    }

    std::vector<double> rd(n), dvec(n), rhs1(n), da(n), dz(n), dw(n), deta(p), rhs_n(n);
    std::vector<double> da_aff(n), dz_aff(n), dw_aff(n), deta_aff(p);

    IpResult out;
    out.beta.assign(p, 0.0);
    const double two_n = 2.0 * static_cast<double>(n);

    for (int iter = 1; iter <= max_iter; ++iter) {
        // dual residual: -y - X eta - z + w
        double rd_norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double xe = 0.0;
            for (std::size_t k = 0; k < p; ++k) xe += cols[k][i] * eta[k];
            rd[i] = -y[i] - xe - z[i] + w[i];
            rd_norm = std::max(rd_norm, std::fabs(rd[i]));
        }
        double gap = 0.0, dual_obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            gap += a[i] * z[i] + s[i] * w[i];
            dual_obj += y[i] * a[i];
        }
        out.gap = gap;
        out.iterations = iter - 1;
        if (gap <= tol * (1.0 + std::fabs(dual_obj)) && rd_norm <= 1e-6 * (1.0 + scale)) {
            out.converged = true;
            break;
        }

        for (std::size_t i = 0; i < n; ++i)
            dvec[i] = 1.0 / (z[i] / a[i] + w[i] / s[i]);

        // affine direction (sigma = 0)
        for (std::size_t i = 0; i < n; ++i) rhs1[i] = rd[i] + z[i] - w[i];
        solve_normal(dvec, rhs1, deta_aff);
        double ap_aff = 1.0, ad_aff = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double xe = 0.0;
            for (std::size_t k = 0; k < p; ++k) xe += cols[k][i] * deta_aff[k];
            const double dai = dvec[i] * (xe - rhs1[i]);
            da_aff[i] = dai;
            dz_aff[i] = -z[i] - (z[i] / a[i]) * dai;
            dw_aff[i] = -w[i] + (w[i] / s[i]) * dai;
            if (dai < 0.0) ap_aff = std::min(ap_aff, -a[i] / dai);
            if (dai > 0.0) ap_aff = std::min(ap_aff, s[i] / dai);
            if (dz_aff[i] < 0.0) ad_aff = std::min(ad_aff, -z[i] / dz_aff[i]);
            if (dw_aff[i] < 0.0) ad_aff = std::min(ad_aff, -w[i] / dw_aff[i]);
        }
        ap_aff = std::min(1.0, fff * ap_aff);
        ad_aff = std::min(1.0, fff * ad_aff);
        double mu_aff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu_aff += (a[i] + ap_aff * da_aff[i]) * (z[i] + ad_aff * dz_aff[i]) +
                      (s[i] - ap_aff * da_aff[i]) * (w[i] + ad_aff * dw_aff[i]);
        }
        mu_aff /= two_n;
        const double mu = gap / two_n;
        double sigma = mu_aff / mu;
        sigma = sigma * sigma * sigma;
        sigma = std::min(1.0, std::max(1e-8, sigma));
        const double target = sigma * mu;

        // corrector
        for (std::size_t i = 0; i < n; ++i) {
            rhs1[i] = rd[i] + z[i] - w[i] - target * (1.0 / a[i] - 1.0 / s[i]) +
                      da_aff[i] * dz_aff[i] / a[i] + da_aff[i] * dw_aff[i] / s[i];
        }
        solve_normal(dvec, rhs1, deta);
        double ap = 1.0, ad = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double xe = 0.0;
            for (std::size_t k = 0; k < p; ++k) xe += cols[k][i] * deta[k];
            const double dai = dvec[i] * (xe - rhs1[i]);
            da[i] = dai;
            dz[i] = (target - da_aff[i] * dz_aff[i]) / a[i] - z[i] - (z[i] / a[i]) * dai;
            dw[i] = (target + da_aff[i] * dw_aff[i]) / s[i] - w[i] + (w[i] / s[i]) * dai;
            if (dai < 0.0) ap = std::min(ap, -a[i] / dai);
            if (dai > 0.0) ap = std::min(ap, s[i] / dai);
            if (dz[i] < 0.0) ad = std::min(ad, -z[i] / dz[i]);
            if (dw[i] < 0.0) ad = std::min(ad, -w[i] / dw[i]);
        }
        ap = std::min(1.0, fff * ap);
        ad = std::min(1.0, fff * ad);
        if (ap < 1e-14 && ad < 1e-14) break;  // stalled

        for (std::size_t i = 0; i < n; ++i) {
            a[i] += ap * da[i];
            s[i] -= ap * da[i];
            z[i] += ad * dz[i];
            w[i] += ad * dw[i];
        }
        for (std::size_t k = 0; k < p; ++k) eta[k] += ad * deta[k];
    }

    for (std::size_t k = 0; k < p; ++k) out.beta[k] = -eta[k];
    return out;
}

}  // namespace qr_detail

// Bandwidth for the residual density: 0.9 * min(sd, IQR/1.34) * T^{-1/5}.
inline double silverman_bandwidth(const std::vector<double>& residuals) {
    if (residuals.size() < 2) throw DomainError("silverman_bandwidth: need >= 2 residuals");
    const double sd = sample_sd(residuals);
    const double iqr = quantile_of(residuals, 0.75) - quantile_of(residuals, 0.25);
    double spread = std::min(sd, iqr / 1.34);
    if (spread <= 0.0) spread = sd;  // point masses can zero the IQR
    if (spread <= 0.0) throw RankDeficiencyError("silverman_bandwidth: degenerate sample");
    return 0.9 * spread * std::pow(static_cast<double>(residuals.size()), -0.2);
}

// Gaussian kernel density of the residuals evaluated at zero.
inline double density_at_zero(const std::vector<double>& residuals, double h) {
    if (residuals.empty()) throw DomainError("density_at_zero: empty residuals");
    if (h <= 0.0) throw DomainError("density_at_zero: bandwidth must be positive");
    double s = 0.0;
    for (double u : residuals) s += normal_pdf(u / h);
    return s / (static_cast<double>(residuals.size()) * h);
}

namespace qr_detail {

inline QuantileFit finish_fit(const PredictiveDataset& data, double tau,
                              double g0, double g1, double objective, int iterations) {
    QuantileFit fit;
    fit.tau = tau;
    fit.gamma0 = g0;
    fit.gamma1 = g1;
    fit.iterations = iterations;
    fit.objective = objective;
    fit.residuals.resize(data.T);
    fit.psi.resize(data.T);
    for (std::size_t t = 0; t < data.T; ++t) {
        const double u = data.y[t] - g0 - g1 * data.x_lag[t];
        fit.residuals[t] = u;
        fit.psi[t] = psi_score(u, tau);
    }
    try {
        fit.bandwidth_h = silverman_bandwidth(fit.residuals);
    } catch (const RankDeficiencyError&) {
        // perfect fit leaves no residual spread; bw.nrd0-style fallback
        double loc = std::fabs(mean_of(fit.residuals));
        if (loc <= 0.0) loc = 1.0;
        fit.bandwidth_h = 0.9 * loc * std::pow(static_cast<double>(data.T), -0.2);
    }
    fit.f_hat = density_at_zero(fit.residuals, fit.bandwidth_h);
    return fit;
}

}  // namespace qr_detail

struct QrOptions {
    double tol = 1e-8;
    int max_iter = 200;
    bool enforce_floor = true;
};

inline QuantileFit solve_qr(const PredictiveDataset& data, double tau, QrOptions opts = {}) {
    if (tau <= 0.0 || tau >= 1.0) throw DomainError("solve_qr: tau outside (0,1)");
    if (opts.enforce_floor && data.T < kMinSample)
        throw SampleTooSmallError("solve_qr: sample below estimation floor");
    if (data.T < 2) throw SampleTooSmallError("solve_qr: need T >= 2");

    double xmin = data.x_lag[0], xmax = data.x_lag[0];
    for (double x : data.x_lag) {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
    }
    if (xmax - xmin <= 1e-12 * (1.0 + std::fabs(xmax)))
        throw RankDeficiencyError("solve_qr: predictor is constant");

    std::vector<std::vector<double>> cols(2);
    cols[0].assign(data.T, 1.0);
    cols[1] = data.x_lag;
    const auto ip = qr_detail::solve_box_lp(cols, data.y, tau, opts.tol, opts.max_iter);

    double obj = 0.0;
    for (std::size_t t = 0; t < data.T; ++t)
        obj += check_loss(data.y[t] - ip.beta[0] - ip.beta[1] * data.x_lag[t], tau);

    if (!ip.converged) {
        QuantileFit best = qr_detail::finish_fit(data, tau, ip.beta[0], ip.beta[1],
                                                 obj, ip.iterations);
        throw QrConvergenceError("solve_qr: interior point did not converge", std::move(best));
    }
    return qr_detail::finish_fit(data, tau, ip.beta[0], ip.beta[1], obj, ip.iterations);
}

// Intercept-only fit (the sample tau-quantile, midpoint on flat optima).
inline double solve_qr_intercept(const std::vector<double>& y, double tau,
                                 double tol = 1e-8, int max_iter = 200) {
    if (tau <= 0.0 || tau >= 1.0) throw DomainError("solve_qr_intercept: tau outside (0,1)");
    if (y.size() < 2) throw SampleTooSmallError("solve_qr_intercept: need >= 2 observations");
    std::vector<std::vector<double>> cols(1);
    cols[0].assign(y.size(), 1.0);
    const auto ip = qr_detail::solve_box_lp(cols, y, tau, tol, max_iter);
    if (!ip.converged)
        throw std::runtime_error("solve_qr_intercept: interior point did not converge");
    return ip.beta[0];
}

}  // namespace qpr

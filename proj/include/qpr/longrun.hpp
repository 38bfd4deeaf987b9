#pragma once

// Long-run covariance machinery: kernel HAC estimates, HVAR prewhitening
// with recoloring for the (psi, v) score pair, the sandwich pieces behind
// the HAC t-statistic, and the t-statistic itself.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/series.hpp"

namespace qpr {

// --- kernels ------------------------------------------------------------------

inline double parzen_kernel(double x) {
    const double ax = std::fabs(x);
    if (ax <= 0.5) return 1.0 - 6.0 * ax * ax + 6.0 * ax * ax * ax;
    if (ax <= 1.0) {
        const double d = 1.0 - ax;
        return 2.0 * d * d * d;
    }
    return 0.0;
}

inline double bartlett_kernel(double x) {
    const double ax = std::fabs(x);
    return ax < 1.0 ? 1.0 - ax : 0.0;
}

inline double qs_kernel(double x) {
    if (x == 0.0) return 1.0;
    const double a = 1.2 * M_PI * x;  // 6*pi*x/5
    return 25.0 / (12.0 * M_PI * M_PI * x * x) * (std::sin(a) / a - std::cos(a));
}

enum class KernelId { parzen, bartlett, quadratic_spectral };

inline double kernel_weight(KernelId k, double x) {
    switch (k) {
        case KernelId::parzen: return parzen_kernel(x);
        case KernelId::bartlett: return bartlett_kernel(x);
        case KernelId::quadratic_spectral: return qs_kernel(x);
    }
    return 0.0;
}

inline const char* kernel_name(KernelId k) {
    switch (k) {
        case KernelId::parzen: return "parzen";
        case KernelId::bartlett: return "bartlett";
        case KernelId::quadratic_spectral: return "qs";
    }
    return "?";
}

// Default lag for the score HAC: floor(1.3 T^{1/3}).
inline int default_sigma_lag(std::size_t T) {
    return static_cast<int>(std::floor(1.3 * std::cbrt(static_cast<double>(T))));
}

// --- bivariate HAC with the AR(1) plug-in bandwidth ---------------------------

namespace lr_detail {

inline double ar1_coefficient(const std::vector<double>& x, double& innov_var) {
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        sxx += x[t - 1] * x[t - 1];
        sxy += x[t - 1] * x[t];
    }
    double rho = sxx > 0.0 ? sxy / sxx : 0.0;
    rho = std::clamp(rho, -0.97, 0.97);
    double ss = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        const double e = x[t] - rho * x[t - 1];
        ss += e * e;
    }
    innov_var = ss / static_cast<double>(x.size() - 1);
    return rho;
}

// Andrews' AR(1) plug-in bandwidth for the quadratic spectral kernel.
inline double andrews_qs_bandwidth(const std::vector<double>& e1,
                                   const std::vector<double>& e2) {
    double num = 0.0, den = 0.0;
    for (const auto* e : {&e1, &e2}) {
        double s2 = 0.0;
        const double rho = ar1_coefficient(*e, s2);
        const double om = 1.0 - rho;
        const double s4 = s2 * s2;
        num += 4.0 * rho * rho * s4 / std::pow(om, 8);
        den += s4 / std::pow(om, 4);
    }
    const double alpha2 = den > 0.0 ? num / den : 0.0;
    const double T = static_cast<double>(e1.size());
    return 1.3221 * std::pow(std::max(alpha2 * T, 1e-12), 0.2);
}

inline Mat2 cross_cov(const std::vector<double>& e1, const std::vector<double>& e2, int j) {
    // (1/T) sum_t eps_t eps_{t-j}'
    Mat2 g{};
    const std::size_t T = e1.size();
    for (std::size_t t = static_cast<std::size_t>(j); t < T; ++t) {
        g.a11 += e1[t] * e1[t - j];
        g.a12 += e1[t] * e2[t - j];
        g.a21 += e2[t] * e1[t - j];
        g.a22 += e2[t] * e2[t - j];
    }
    return g * (1.0 / static_cast<double>(T));
}

}  // namespace lr_detail

// Kernel HAC long-run covariance of a demeaned bivariate series, QS kernel
// with Andrews bandwidth. The QS tail is truncated once weights drop below
// ~3e-4 of the peak.
inline Mat2 hac_longrun_qs(const std::vector<double>& e1, const std::vector<double>& e2) {
    if (e1.size() != e2.size() || e1.size() < 4)
        throw DomainError("hac_longrun_qs: need equal-length series of length >= 4");
    const double band = lr_detail::andrews_qs_bandwidth(e1, e2);
    const int T = static_cast<int>(e1.size());
    const int jmax = std::min(T - 1, static_cast<int>(std::ceil(25.0 * band)));
    Mat2 omega = lr_detail::cross_cov(e1, e2, 0);
    for (int j = 1; j <= jmax; ++j) {
        const double w = qs_kernel(static_cast<double>(j) / band);
        if (w == 0.0) continue;
        const Mat2 g = lr_detail::cross_cov(e1, e2, j);
        omega = omega + (g + g.transpose()) * w;
    }
    return omega.symmetrized();
}

// --- long-run estimates --------------------------------------------------------

struct LongRunEstimates {
    double omega_psi2 = 0.0;
    double omega_psi_v = 0.0;
    double omega_v2 = 0.0;
    double delta_tau = 0.0;  // omega_psi_v / (omega_psi * omega_v)
    double lambda_vv = 0.0;  // one-sided long-run covariance of v
    Mat2 sigma_hat{};        // kernel HAC of z_{t-1} psi_t
    Mat2 delta_fz_hat{};     // density-weighted Gram of z_{t-1}
    int bandwidth_m = 0;
    std::string kernel = "parzen";
    bool prewhitening_failed = false;  // fell back to the plain HAC
    int floor_events = 0;              // eigenvalue floors applied
};

namespace lr_detail {

struct HvarFit {
    // psi equation: psi_t = b0 + phi_m11 psi_{t-1} + phi_q11 qbar + phi_y11 ybar
    // v equation:   v_t   = b0 + phi_m21 psi_{t-1} + phi_m22 v_{t-1}
    double phi_m11 = 0.0, phi_q11 = 0.0, phi_y11 = 0.0;
    double phi_m21 = 0.0, phi_m22 = 0.0;
    std::vector<double> eps1, eps2;
};

// OLS with a tiny fixed regressor count; gram is built then solved by
// Gaussian elimination with partial pivoting.
inline std::vector<double> ols(const std::vector<std::vector<double>>& X,
                               const std::vector<double>& y) {
    const std::size_t p = X.size();
    const std::size_t n = y.size();
    std::vector<std::vector<double>> m(p, std::vector<double>(p + 1, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += X[i][t] * X[j][t];
            m[i][j] = s;
            m[j][i] = s;
        }
        double s = 0.0;
        for (std::size_t t = 0; t < n; ++t) s += X[i][t] * y[t];
        m[i][p] = s;
    }
    for (std::size_t col = 0; col < p; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < p; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        if (std::fabs(m[col][col]) < 1e-12 * (1.0 + std::fabs(m[0][0])))
            throw RankDeficiencyError("ols: singular normal equations");
        for (std::size_t r = 0; r < p; ++r) {
            if (r == col) continue;
            const double f = m[r][col] / m[col][col];
            for (std::size_t cc = col; cc <= p; ++cc) m[r][cc] -= f * m[col][cc];
        }
    }
    std::vector<double> beta(p);
    for (std::size_t i = 0; i < p; ++i) beta[i] = m[i][p] / m[i][i];
    return beta;
}

inline HvarFit fit_hvar(const std::vector<double>& psi, const std::vector<double>& v,
                        bool force_zero_phi) {
    const std::size_t T = psi.size();
    const std::size_t start = 12;  // yearly mean needs 12 lags
    const std::size_t n = T - start;

    std::vector<double> ones(n, 1.0), psi1(n), v1(n), qbar(n), ybar(n), y1(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = start + i;
        psi1[i] = psi[t - 1];
        v1[i] = v[t - 1];
        double q = 0.0, yy = 0.0;
        for (std::size_t j = 1; j <= 12; ++j) {
            yy += psi[t - j];
            if (j <= 3) q += psi[t - j];
        }
        qbar[i] = q / 3.0;
        ybar[i] = yy / 12.0;
        y1[i] = psi[t];
        y2[i] = v[t];
    }

    const auto b1 = force_zero_phi ? std::vector<double>{mean_of(y1), 0.0, 0.0, 0.0}
                                   : ols({ones, psi1, qbar, ybar}, y1);
    const auto b2 = force_zero_phi ? std::vector<double>{mean_of(y2), 0.0, 0.0}
                                   : ols({ones, psi1, v1}, y2);

    HvarFit fit;
    fit.phi_m11 = b1[1];
    fit.phi_q11 = b1[2];
    fit.phi_y11 = b1[3];
    fit.phi_m21 = b2[1];
    fit.phi_m22 = b2[2];
    fit.eps1.resize(n);
    fit.eps2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        fit.eps1[i] = y1[i] - b1[0] - b1[1] * psi1[i] - b1[2] * qbar[i] - b1[3] * ybar[i];
        fit.eps2[i] = y2[i] - b2[0] - b2[1] * psi1[i] - b2[2] * v1[i];
    }
    return fit;
}

inline void fill_omega(LongRunEstimates& lr, Mat2 omega) {
    lr.floor_events += floor_eigenvalues(omega, 1e-12 * std::max(omega.trace(), 1e-300));
    lr.omega_psi2 = std::max(omega.a11, 0.0);
    lr.omega_psi_v = omega.a12;
    lr.omega_v2 = std::max(omega.a22, 1e-300);
    const double denom = std::sqrt(lr.omega_psi2 * lr.omega_v2);
    lr.delta_tau = denom > 0.0 ? std::clamp(lr.omega_psi_v / denom, -1.0, 1.0) : 0.0;
}

}  // namespace lr_detail

// Plain (non-prewhitened) long-run covariance of the demeaned score pair.
inline Mat2 plain_omega(std::vector<double> psi, std::vector<double> v) {
    psi = demean(psi);
    v = demean(v);
    return hac_longrun_qs(psi, v);
}

// Heterogeneous-VAR prewhitened long-run covariance of U_t = (psi_t, v_t)'.
// The psi equation carries lag-1, quarterly-mean and yearly-mean own terms;
// the v equation carries lag-1 terms only. The residual covariance is
// recolored through A = I - Phi^(m) - Phi^(q) - Phi^(y).
inline LongRunEstimates hvar_prewhitened_omega(const std::vector<double>& psi,
                                               const std::vector<double>& v,
                                               bool force_zero_phi = false) {
    if (psi.size() != v.size()) throw AlignmentError("hvar_prewhitened_omega: length mismatch");
    if (psi.size() < 30)
        throw SampleTooSmallError("hvar_prewhitened_omega: need T >= 30 for 12 lags");

    LongRunEstimates lr;
    try {
        const auto fit = lr_detail::fit_hvar(psi, v, force_zero_phi);
        // A is lower triangular given the zero restrictions
        const double a11 = 1.0 - fit.phi_m11 - fit.phi_q11 - fit.phi_y11;
        const double a22 = 1.0 - fit.phi_m22;
        if (std::fabs(a11) < 1e-6 || std::fabs(a22) < 1e-6)
            throw RankDeficiencyError("hvar: recoloring matrix singular");
        const Mat2 a_inv = Mat2{a11, 0.0, -fit.phi_m21, a22}.inverse();
        const Mat2 omega_eps = hac_longrun_qs(fit.eps1, fit.eps2);
        lr_detail::fill_omega(lr, a_inv * omega_eps * a_inv.transpose());
    } catch (const std::runtime_error&) {
        lr.prewhitening_failed = true;
        lr_detail::fill_omega(lr, plain_omega(psi, v));
    }
    lr.lambda_vv = 0.5 * (lr.omega_v2 - variance_of(v));
    return lr;
}

// One-sided long-run covariance of v: (omega_v^2 - var(v)) / 2.
inline double lambda_vv(const std::vector<double>& v, double omega_v2) {
    return 0.5 * (omega_v2 - variance_of(v));
}

// --- HAC sandwich pieces -------------------------------------------------------

// Autocovariance of z_{t-1} psi_t at lag ell (ell >= 0); Gamma(-ell) is the
// transpose.
inline Mat2 score_autocov(const QuantileFit& fit, const PredictiveDataset& data, int ell) {
    Mat2 g{};
    const std::size_t T = data.T;
    for (std::size_t t = static_cast<std::size_t>(ell); t < T; ++t) {
        const double pl = fit.psi[t];          // psi at t (lead index)
        const double pb = fit.psi[t - ell];    // psi at t-ell
        const double xl = data.x_lag[t];
        const double xb = data.x_lag[t - ell];
        g.a11 += pl * pb;
        g.a12 += pl * pb * xb;
        g.a21 += xl * pl * pb;
        g.a22 += xl * pl * pb * xb;
    }
    return g * (1.0 / static_cast<double>(T));
}

// Kernel-weighted sum of score autocovariances over |ell| <= m, symmetrized.
inline Mat2 sigma_hat(const QuantileFit& fit, const PredictiveDataset& data,
                      KernelId kernel, int m) {
    if (m < 0) throw DomainError("sigma_hat: negative lag length");
    if (static_cast<std::size_t>(m) >= data.T) throw DomainError("sigma_hat: m >= T");
    Mat2 s = score_autocov(fit, data, 0);
    for (int ell = 1; ell <= m; ++ell) {
        const double w = kernel_weight(kernel, static_cast<double>(ell) / static_cast<double>(m));
        if (w == 0.0) continue;
        const Mat2 g = score_autocov(fit, data, ell);
        s = s + (g + g.transpose()) * w;
    }
    return s.symmetrized();
}

// Density-weighted Gram: (1/(T h)) sum phi(u_t/h) z_{t-1} z_{t-1}'.
inline Mat2 delta_fz_hat(const QuantileFit& fit, const PredictiveDataset& data) {
    Mat2 d{};
    const double h = fit.bandwidth_h;
    for (std::size_t t = 0; t < data.T; ++t) {
        const double w = normal_pdf(fit.residuals[t] / h);
        const double x = data.x_lag[t];
        d.a11 += w;
        d.a12 += w * x;
        d.a22 += w * x * x;
    }
    d.a21 = d.a12;
    return d * (1.0 / (static_cast<double>(data.T) * h));
}

struct HacTStat {
    double t_value = 0.0;
    double se = 0.0;
    double tau = 0.0;
    double gamma1_hat = 0.0;
};

namespace lr_detail {

inline HacTStat t_from_sandwich(const QuantileFit& fit, const PredictiveDataset& data,
                                const Mat2& sigma) {
    const Mat2 delta = delta_fz_hat(fit, data);
    if (!(std::fabs(delta.det()) > 1e-300))
        throw SandwichError("hac_t: density-weighted Gram is singular");
    const Mat2 di = delta.inverse();
    const Mat2 v = di * sigma * di;
    const double var22 = v.a22 / static_cast<double>(data.T);
    if (!(var22 > 0.0)) throw SandwichError("hac_t: nonpositive slope variance");
    HacTStat t;
    t.tau = fit.tau;
    t.gamma1_hat = fit.gamma1;
    t.se = std::sqrt(var22);
    t.t_value = fit.gamma1 / t.se;
    return t;
}

}  // namespace lr_detail

// HAC t-statistic: se is the sqrt of the (2,2) entry of
// T^{-1} Delta^{-1} Sigma Delta^{-1}.
inline HacTStat hac_t(const QuantileFit& fit, const PredictiveDataset& data,
                      const LongRunEstimates& lr) {
    return lr_detail::t_from_sandwich(fit, data, lr.sigma_hat);
}

// Serially-independent-errors variant: Sigma replaced by tau(1-tau) Szz.
inline HacTStat iid_t(const QuantileFit& fit, const PredictiveDataset& data) {
    Mat2 szz{};
    for (std::size_t t = 0; t < data.T; ++t) {
        const double x = data.x_lag[t];
        szz.a11 += 1.0;
        szz.a12 += x;
        szz.a22 += x * x;
    }
    szz.a21 = szz.a12;
    szz = szz * (fit.tau * (1.0 - fit.tau) / static_cast<double>(data.T));
    return lr_detail::t_from_sandwich(fit, data, szz);
}

// Residuals of an intercept AR(1) fitted to the predictor path; the v-hat
// series feeding the long-run estimates.
inline std::vector<double> predictor_innovations(const PredictiveDataset& data) {
    std::vector<double> ones(data.T, 1.0);
    const auto beta = lr_detail::ols({ones, data.x_lag}, data.x_level);
    std::vector<double> v(data.T);
    for (std::size_t t = 0; t < data.T; ++t)
        v[t] = data.x_level[t] - beta[0] - beta[1] * data.x_lag[t];
    return v;
}

// Convenience assembly used by the test pipeline: HVAR-prewhitened Omega,
// lambda_vv, Parzen Sigma-hat with the default lag, and the Gram.
inline LongRunEstimates estimate_longrun(const QuantileFit& fit, const PredictiveDataset& data) {
    const auto v = predictor_innovations(data);
    LongRunEstimates lr = hvar_prewhitened_omega(fit.psi, v);
    lr.bandwidth_m = default_sigma_lag(data.T);
    lr.kernel = kernel_name(KernelId::parzen);
    lr.sigma_hat = sigma_hat(fit, data, KernelId::parzen, lr.bandwidth_m);
    lr.delta_fz_hat = delta_fz_hat(fit, data);
    return lr;
}

}  // namespace qpr

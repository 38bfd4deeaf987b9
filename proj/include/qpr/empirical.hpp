#pragma once

// Empirical pipeline: monthly valuation-predictor CSV ingestion, predictor
// construction, preliminary persistence/endogeneity indicators, and the
// per-decile switching-FM report.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/fmtest.hpp"
#include "qpr/longrun.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/series.hpp"
#include "qpr/unitroot.hpp"

namespace qpr {

// Column-name mapping; vintages rename columns, so this is configuration.
struct ColumnMap {
    std::string date = "yyyymm";
    std::string price = "Index";
    std::string dividends = "D12";
    std::string earnings = "E12";
    std::string book_market = "b/m";
    std::string market_return = "CRSP_SPvw";
    std::string riskfree = "Rfree";
};

struct EmpiricalConfig {
    std::string input_path;
    long start_yyyymm = 192601;
    long end_yyyymm = 201512;
    std::string predictor = "dp";      // dp | ep | bm | custom
    std::string custom_column;         // used when predictor == custom
    std::vector<double> taus = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    double alpha2 = 0.10;
    std::string tables_dir;
    std::string output_path;
    std::string alpha1_source = "generated";  // generated | paper
    ColumnMap columns;
};

namespace emp_detail {

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw IngestError("missing required column '" + name + "'");
    }
};

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open input file '" + path + "'");
    Csv csv;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) fields.push_back(trim(item));
        if (first) {
            csv.header = fields;
            first = false;
        } else {
            csv.rows.push_back(fields);
        }
    }
    if (first) throw IngestError("input file '" + path + "' has no header row");
    return csv;
}

inline bool missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "." || s == "#N/A";
}

inline double parse_number(const std::string& s, long row_date, const std::string& col) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing characters");
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
        return v;
    } catch (const std::exception&) {
        throw IngestError("unparseable number '" + s + "' in column '" + col +
                          "' at row " + std::to_string(row_date));
    }
}

inline long next_month(long yyyymm) {
    const long y = yyyymm / 100, m = yyyymm % 100;
    return m == 12 ? (y + 1) * 100 + 1 : yyyymm + 1;
}

}  // namespace emp_detail

// Reads the monthly file, builds the excess return and the chosen predictor,
// trims missing edges inside the span, and rejects interior gaps.
inline std::pair<TimeSeries, TimeSeries> ingest(const EmpiricalConfig& cfg) {
    using namespace emp_detail;
    const Csv csv = read_csv(cfg.input_path);
    const auto& cm = cfg.columns;

    const std::size_t date_col = csv.column(cm.date);
    const std::size_t ret_col = csv.column(cm.market_return);
    const std::size_t rf_col = csv.column(cm.riskfree);

    std::vector<std::size_t> pred_cols;
    enum class PredKind { dp, ep, bm, custom } kind;
    if (cfg.predictor == "dp") {
        kind = PredKind::dp;
        pred_cols = {csv.column(cm.dividends), csv.column(cm.price)};
    } else if (cfg.predictor == "ep") {
        kind = PredKind::ep;
        pred_cols = {csv.column(cm.earnings), csv.column(cm.price)};
    } else if (cfg.predictor == "bm") {
        kind = PredKind::bm;
        pred_cols = {csv.column(cm.book_market)};
    } else if (cfg.predictor == "custom") {
        kind = PredKind::custom;
        if (cfg.custom_column.empty())
            throw IngestError("predictor=custom requires a column name");
        pred_cols = {csv.column(cfg.custom_column)};
    } else {
        throw IngestError("unknown predictor '" + cfg.predictor + "'");
    }

    struct Row {
        long date;
        bool complete;
        double y, x;
    };
    std::vector<Row> rows;
    for (const auto& fields : csv.rows) {
        if (fields.size() <= date_col) continue;
        if (missing(fields[date_col])) continue;
        const long date = std::stol(fields[date_col]);
        if (date < cfg.start_yyyymm || date > cfg.end_yyyymm) continue;

        Row r{date, true, 0.0, 0.0};
        auto field_ok = [&](std::size_t col) {
            return fields.size() > col && !missing(fields[col]);
        };
        if (!field_ok(ret_col) || !field_ok(rf_col)) r.complete = false;
        for (std::size_t c : pred_cols)
            if (!field_ok(c)) r.complete = false;
        if (r.complete) {
            const double ret = parse_number(fields[ret_col], date, cm.market_return);
            const double rf = parse_number(fields[rf_col], date, cm.riskfree);
            r.y = ret - rf;
            switch (kind) {
                case PredKind::dp: {
                    const double d12 = parse_number(fields[pred_cols[0]], date, cm.dividends);
                    const double px = parse_number(fields[pred_cols[1]], date, cm.price);
                    if (d12 <= 0.0 || px <= 0.0)
                        throw IngestError("nonpositive dividend or price at row " +
                                          std::to_string(date));
                    r.x = std::log(d12 / px);
                    break;
                }
                case PredKind::ep: {
                    const double e12 = parse_number(fields[pred_cols[0]], date, cm.earnings);
                    const double px = parse_number(fields[pred_cols[1]], date, cm.price);
                    if (e12 <= 0.0 || px <= 0.0)
                        throw IngestError("nonpositive earnings or price at row " +
                                          std::to_string(date));
                    r.x = std::log(e12 / px);
                    break;
                }
                case PredKind::bm:
                case PredKind::custom:
                    r.x = parse_number(fields[pred_cols[0]], date, csv.header[pred_cols[0]]);
                    break;
            }
        }
        rows.push_back(r);
    }
    if (rows.empty()) throw IngestError("no rows inside the requested span");

    // trim incomplete edges, reject interior gaps
    std::size_t lo = 0, hi = rows.size();
    while (lo < hi && !rows[lo].complete) ++lo;
    while (hi > lo && !rows[hi - 1].complete) --hi;
    if (lo >= hi) throw IngestError("no complete rows inside the requested span");
    std::vector<double> y, x;
    long expected = rows[lo].date;
    for (std::size_t i = lo; i < hi; ++i) {
        if (!rows[i].complete)
            throw IngestError("interior missing value at row " + std::to_string(rows[i].date));
        if (rows[i].date != expected)
            throw IngestError("calendar gap at row " + std::to_string(rows[i].date) +
                              " (expected " + std::to_string(expected) + ")");
        expected = emp_detail::next_month(rows[i].date);
        y.push_back(rows[i].y);
        x.push_back(rows[i].x);
    }
    const long first = rows[lo].date;
    return {TimeSeries(std::move(y), "excess_return", first),
            TimeSeries(std::move(x), cfg.predictor, first)};
}

// Persistence/endogeneity indicators for one predictor: DF-GLS statistic and
// root, the 95% interval on c, the implied roots, and the correlation between
// the ADF innovation residual and the return regression residual.
struct PreliminaryIndicators {
    DfGlsResult dfgls;
    double c_lower_95 = 0.0;
    double c_upper_95 = 0.0;
    double phi_lower = 0.0;
    double phi_upper = 0.0;
    double delta_hat = 0.0;
    std::size_t T = 0;
};

namespace emp_detail {

// Intercept ADF on the raw path with BIC lag selection; returns the residual
// series aligned to observation indices [k+1, N).
inline std::pair<std::vector<double>, std::size_t> adf_intercept_residuals(
    const std::vector<double>& x) {
    const std::size_t N = x.size();
    const int kmax = std::min(default_adf_lag_cap(N), static_cast<int>(N) / 3);
    const std::size_t t0 = static_cast<std::size_t>(kmax) + 1;

    auto fit_k = [&](int k, std::size_t start, double& ssr, std::vector<double>* resid) {
        const std::size_t n = N - start;
        std::vector<std::vector<double>> X;
        X.emplace_back(n, 1.0);
        X.emplace_back(n, 0.0);
        for (int j = 1; j <= k; ++j) X.emplace_back(n, 0.0);
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t t = start + i;
            d[i] = x[t] - x[t - 1];
            X[1][i] = x[t - 1];
            for (int j = 1; j <= k; ++j) X[1 + j][i] = x[t - j] - x[t - j - 1];
        }
        const auto beta = lr_detail::ols(X, d);
        ssr = 0.0;
        if (resid) resid->resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double fit = 0.0;
            for (std::size_t p = 0; p < X.size(); ++p) fit += beta[p] * X[p][i];
            const double e = d[i] - fit;
            ssr += e * e;
            if (resid) (*resid)[i] = e;
        }
        return beta;
    };

    int best_k = 0;
    double best_bic = 0.0;
    for (int k = 0; k <= kmax; ++k) {
        double ssr = 0.0;
        fit_k(k, t0, ssr, nullptr);
        const double n = static_cast<double>(N - t0);
        const double bic = n * std::log(ssr / n) + static_cast<double>(k + 2) * std::log(n);
        if (k == 0 || bic < best_bic) {
            best_bic = bic;
            best_k = k;
        }
    }
    std::vector<double> resid;
    double ssr = 0.0;
    fit_k(best_k, static_cast<std::size_t>(best_k) + 1, ssr, &resid);
    return {std::move(resid), static_cast<std::size_t>(best_k) + 1};
}

}  // namespace emp_detail

inline PreliminaryIndicators preliminary_indicators(const TimeSeries& y, const TimeSeries& x,
                                                    const CriticalValueTable& dfgls_table) {
    PreliminaryIndicators out;
    const auto data = align_predictive(y, x);
    out.T = data.T;
    const auto path = data.predictor_path();
    out.dfgls = dfgls(path, default_adf_lag_cap(path.size()));
    const auto ci = stock_ci(out.dfgls, 0.05, dfgls_table);
    out.c_lower_95 = ci.c_lower;
    out.c_upper_95 = ci.c_upper;
    const double n = static_cast<double>(path.size());
    out.phi_lower = 1.0 + ci.c_lower / n;
    out.phi_upper = 1.0 + ci.c_upper / n;

    // innovation residuals from the intercept ADF at BIC lags, against the
    // return regression residuals over the overlapping window
    const auto [eps, start] = emp_detail::adf_intercept_residuals(path);
    std::vector<double> ones(data.T, 1.0);
    const auto beta = lr_detail::ols({ones, data.x_lag}, data.y);
    double svv = 0.0, suu = 0.0, suv = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const std::size_t t = start + i - 1;  // path index start+i is y index start+i-1
        if (t >= data.T) break;
        const double u = data.y[t] - beta[0] - beta[1] * data.x_lag[t];
        suu += u * u;
        svv += eps[i] * eps[i];
        suv += u * eps[i];
    }
    out.delta_hat = suv / std::sqrt(suu * svv);
    return out;
}

// One row of the empirical report (one quantile level).
struct EmpiricalRow {
    double tau = 0.0;
    double gamma1 = 0.0;
    double t_std = 0.0;
    double t_hac = 0.0;
    double delta_tau = 0.0;
    SwitchingFMResult switching;
};

struct EmpiricalReport {
    PreliminaryIndicators indicators;
    std::vector<EmpiricalRow> rows;
    std::size_t T = 0;
};

inline EmpiricalReport run_quantile_tests(const TimeSeries& y, const TimeSeries& x,
                                          const EmpiricalConfig& cfg,
                                          const SwitchingTables& tables) {
    tables.require_complete();
    EmpiricalReport rep;
    rep.indicators = preliminary_indicators(y, x, *tables.dfgls);
    const auto data = align_predictive(y, x);
    rep.T = data.T;
    SwitchThresholds th;
    th.alpha2 = cfg.alpha2;
    for (double tau : cfg.taus) {
        EmpiricalRow row;
        row.tau = tau;
        try {
            const auto fit = solve_qr(data, tau);
            row.gamma1 = fit.gamma1;
            row.t_std = iid_t(fit, data).t_value;
            row.switching = switching_test(data, tau, tables, th);
            row.t_hac = row.switching.hac.t_value;
            row.delta_tau = row.switching.delta_tau;
        } catch (const std::exception& e) {
            throw SandwichError("tau=" + std::to_string(tau) + ": " + e.what());
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

// Tab-delimited emission mirroring a statistics-by-quantile layout.
inline void write_empirical_report(const EmpiricalReport& rep, std::ostream& os,
                                   const std::string& header_lines) {
    os << header_lines;
    char buf[64];
    auto row = [&](const std::string& name, auto getter) {
        os << name;
        for (const auto& r : rep.rows) {
            std::snprintf(buf, sizeof buf, "\t%.4f", getter(r));
            os << buf;
        }
        os << "\n";
    };
    os << "# T=" << rep.T << " dfgls_t=" << rep.indicators.dfgls.t_stat
       << " phi_hat=" << rep.indicators.dfgls.phi_hat
       << " c95=[" << rep.indicators.c_lower_95 << "," << rep.indicators.c_upper_95 << "]"
       << " delta_hat=" << rep.indicators.delta_hat << "\n";
    os << "tau";
    for (const auto& r : rep.rows) {
        std::snprintf(buf, sizeof buf, "\t%.1f", r.tau);
        os << buf;
    }
    os << "\n";
    row("gamma1", [](const EmpiricalRow& r) { return r.gamma1; });
    row("t_std", [](const EmpiricalRow& r) { return r.t_std; });
    row("t_hac", [](const EmpiricalRow& r) { return r.t_hac; });
    row("delta_tau", [](const EmpiricalRow& r) { return r.delta_tau; });
    row("c_L_right", [](const EmpiricalRow& r) { return r.switching.ci_right.c_lower; });
    row("c_U_right", [](const EmpiricalRow& r) { return r.switching.ci_right.c_upper; });
    row("c_L_left", [](const EmpiricalRow& r) { return r.switching.ci_left.c_lower; });
    row("c_U_left", [](const EmpiricalRow& r) { return r.switching.ci_left.c_upper; });
    row("gamma1_lower", [](const EmpiricalRow& r) { return r.switching.gamma1_lower; });
    row("gamma1_upper", [](const EmpiricalRow& r) { return r.switching.gamma1_upper; });
    os << "reject";
    for (const auto& r : rep.rows) {
        os << '\t';
        if (r.switching.reject_right) os << ">";
        if (r.switching.reject_left) os << "<";
        if (!r.switching.reject_right && !r.switching.reject_left) os << ".";
    }
    os << "\n";
}

}  // namespace qpr

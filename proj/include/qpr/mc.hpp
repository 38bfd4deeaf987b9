#pragma once

// Size and power experiment harness: grids of (tau, c, delta, alternative)
// cells, rejection rates with Monte Carlo standard errors, and delimited
// text reports. One dataset per (c, delta, alternative, replication) serves
// every tau and every test kind, so comparisons are paired.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qpr/dgp.hpp"
#include "qpr/errors.hpp"
#include "qpr/fmtest.hpp"
#include "qpr/longrun.hpp"
#include "qpr/parallel.hpp"
#include "qpr/quantreg.hpp"
#include "qpr/rng.hpp"
#include "qpr/tables.hpp"

namespace qpr {

enum class TestKind { standard_t, standard_t_hac, switching_fm };

inline const char* test_kind_name(TestKind k) {
    switch (k) {
        case TestKind::standard_t: return "standard_t";
        case TestKind::standard_t_hac: return "standard_t_hac";
        case TestKind::switching_fm: return "switching_fm";
    }
    return "?";
}

struct ExperimentGrid {
    std::vector<double> taus;
    std::vector<double> c_values;
    std::vector<double> delta_values;
    std::vector<double> alternative;  // gamma1 grid, or pre-scaled zeta1 grid
    bool tail_alternative = false;    // true: alternative is the zeta1 axis
    double zeta2 = 0.0;               // pre-scaled, used when tail_alternative
    InnovationKind innovation_kind = InnovationKind::gaussian;
    int nu = 8;
    std::size_t T = 400;
    long replications = 2000;
    TestKind test_kind = TestKind::switching_fm;
    std::uint64_t seed = 1;
    unsigned threads = 0;

    void validate() const {
        if (replications < 100) throw DomainError("ExperimentGrid: replications < 100");
        for (double t : taus)
            if (t <= 0.0 || t >= 1.0) throw DomainError("ExperimentGrid: tau outside (0,1)");
        if (taus.empty() || c_values.empty() || delta_values.empty() || alternative.empty())
            throw DomainError("ExperimentGrid: empty axis");
    }
};

struct RejectionReport {
    // cell order: delta-major, then c, then alternative, then tau
    std::vector<double> rate;
    std::vector<double> mc_se;
    std::vector<long> failures;
    std::vector<double> population_slope;  // classifies size vs power cells
    ExperimentGrid grid;
    long total_replications = 0;  // grid cells x replications - failures

    std::size_t cells() const { return rate.size(); }
    std::size_t index(std::size_t di, std::size_t ci, std::size_t ai, std::size_t ti) const {
        return ((di * grid.c_values.size() + ci) * grid.alternative.size() + ai) *
                   grid.taus.size() + ti;
    }
    bool cell_valid(std::size_t idx) const {
        return failures[idx] * 100 <= grid.replications;  // <= 1% failed
    }
};

namespace mc_detail {

inline DgpSpec cell_spec(const ExperimentGrid& g, double c, double delta, double alt,
                         std::uint64_t rep_key) {
    DgpSpec s;
    s.T = g.T;
    s.c = c;
    s.delta = delta;
    s.innovation_kind = g.innovation_kind;
    s.nu = g.nu;
    s.seed = rep_key;
    if (g.tail_alternative) {
        s.gamma1 = 0.0;
        s.b_identity = true;
        s.zeta1 = alt;
        s.zeta2 = g.zeta2;
    } else {
        s.gamma1 = alt;
    }
    return s;
}

}  // namespace mc_detail

// Right-tailed rejection indicators at 5% for every tau on one dataset.
// Returns one flag per tau; failures raise.
inline std::vector<bool> run_tests_on_dataset(const PredictiveDataset& data,
                                              const std::vector<double>& taus,
                                              TestKind kind, const SwitchingTables& tables,
                                              const SwitchThresholds& thresholds) {
    std::vector<bool> reject(taus.size(), false);
    const double z95 = 1.6448536269514722;
    switch (kind) {
        case TestKind::standard_t: {
            for (std::size_t i = 0; i < taus.size(); ++i) {
                const auto fit = solve_qr(data, taus[i]);
                reject[i] = iid_t(fit, data).t_value >= z95;
            }
            break;
        }
        case TestKind::standard_t_hac: {
            for (std::size_t i = 0; i < taus.size(); ++i) {
                const auto fit = solve_qr(data, taus[i]);
                const auto lr = estimate_longrun(fit, data);
                reject[i] = hac_t(fit, data, lr).t_value >= z95;
            }
            break;
        }
        case TestKind::switching_fm: {
            tables.require_complete();
            // the first-stage statistic does not depend on tau
            const auto x = data.predictor_path();
            const auto df = dfgls(x, default_adf_lag_cap(x.size()));
            const double z_hi = normal_quantile(1.0 - thresholds.alpha2 / 2.0);
            const double z_t = z_quantile(*tables.z, thresholds.c_bar_L, -1.0,
                                          1.0 - thresholds.alpha2 / 2.0);
            for (std::size_t i = 0; i < taus.size(); ++i) {
                const auto fit = solve_qr(data, taus[i]);
                const auto lr = estimate_longrun(fit, data);
                const auto hac = hac_t(fit, data, lr);
                const auto [a_low, a_high] = lookup_alpha1(*tables.alpha1, lr.delta_tau);
                const auto ci = stock_ci(df, a_high, *tables.dfgls);
                const auto affine = fm_detail::fm_affine(fit, data, lr);
                const auto d = fm_detail::right_tail(affine, ci, thresholds.c_bar_L,
                                                     z_hi, z_t, hac);
                reject[i] = d.reject;
            }
            break;
        }
    }
    return reject;
}

// Null-imposing and alternative grids share one engine; cells whose
// population slope is zero are size cells, the rest power cells.
inline RejectionReport run_experiment(const ExperimentGrid& grid,
                                      const SwitchingTables& tables,
                                      const SwitchThresholds& thresholds = {}) {
    grid.validate();
    if (grid.test_kind == TestKind::switching_fm) tables.require_complete();

    RejectionReport rep;
    rep.grid = grid;
    const std::size_t nd = grid.delta_values.size();
    const std::size_t nc = grid.c_values.size();
    const std::size_t na = grid.alternative.size();
    const std::size_t nt = grid.taus.size();
    const std::size_t cells = nd * nc * na * nt;
    rep.rate.assign(cells, 0.0);
    rep.mc_se.assign(cells, 0.0);
    rep.failures.assign(cells, 0);
    rep.population_slope.assign(cells, 0.0);

    const auto R = static_cast<std::size_t>(grid.replications);
    std::vector<std::uint8_t> outcomes(R * nt);  // 0 accept, 1 reject, 2 failed

    for (std::size_t di = 0; di < nd; ++di) {
        for (std::size_t ci = 0; ci < nc; ++ci) {
            for (std::size_t ai = 0; ai < na; ++ai) {
                parallel_for(R, grid.threads, [&](std::size_t r) {
                    // keyed without tau and without test kind: paired draws
                    const std::uint64_t key =
                        stream_key(grid.seed, rng_domain::mc_experiment,
                                   di * nc + ci, ai, r);
                    const auto spec = mc_detail::cell_spec(grid, grid.c_values[ci],
                                                           grid.delta_values[di],
                                                           grid.alternative[ai], key);
                    try {
                        const auto data = simulate(spec);
                        const auto rej = run_tests_on_dataset(data, grid.taus,
                                                              grid.test_kind, tables,
                                                              thresholds);
                        for (std::size_t ti = 0; ti < nt; ++ti)
                            outcomes[r * nt + ti] = rej[ti] ? 1 : 0;
                    } catch (const std::exception&) {
                        for (std::size_t ti = 0; ti < nt; ++ti) outcomes[r * nt + ti] = 2;
                    }
                });
                for (std::size_t ti = 0; ti < nt; ++ti) {
                    long rejects = 0, fails = 0;
                    for (std::size_t r = 0; r < R; ++r) {
                        const auto o = outcomes[r * nt + ti];
                        if (o == 2) ++fails;
                        else rejects += o;
                    }
                    const std::size_t idx = rep.index(di, ci, ai, ti);
                    const long done = grid.replications - fails;
                    const double rate = done > 0 ? static_cast<double>(rejects) / done : 0.0;
                    rep.rate[idx] = rate;
                    rep.mc_se[idx] = done > 0 ? std::sqrt(rate * (1.0 - rate) / done) : 0.0;
                    rep.failures[idx] = fails;
                    const auto spec = mc_detail::cell_spec(grid, grid.c_values[ci],
                                                           grid.delta_values[di],
                                                           grid.alternative[ai], 0);
                    rep.population_slope[idx] =
                        population_quantile_slope(spec, grid.taus[ti]);
                }
            }
        }
    }
    long fails = 0;
    for (long f : rep.failures) fails += f;
    rep.total_replications = static_cast<long>(cells) * grid.replications - fails;
    return rep;
}

// --- report emission ------------------------------------------------------------

namespace mc_detail {

inline void write_matrix(std::ostream& os, const RejectionReport& rep,
                         const std::vector<double>& source) {
    const auto& g = rep.grid;
    char buf[64];
    for (std::size_t di = 0; di < g.delta_values.size(); ++di) {
        for (std::size_t ai = 0; ai < g.alternative.size(); ++ai) {
            os << "# panel delta=" << g.delta_values[di];
            if (g.alternative.size() > 1 || g.alternative[0] != 0.0)
                os << " alt=" << g.alternative[ai];
            os << "\n";
            os << "c";
            for (double tau : g.taus) {
                std::snprintf(buf, sizeof buf, "\ttau=%.3g", tau);
                os << buf;
            }
            os << "\n";
            for (std::size_t ci = 0; ci < g.c_values.size(); ++ci) {
                std::snprintf(buf, sizeof buf, "%g", g.c_values[ci]);
                os << buf;
                for (std::size_t ti = 0; ti < g.taus.size(); ++ti) {
                    std::snprintf(buf, sizeof buf, "\t%.4f",
                                  source[rep.index(di, ci, ai, ti)]);
                    os << buf;
                }
                os << "\n";
            }
        }
    }
}

}  // namespace mc_detail

// Primary file holds the rejection rates panel by panel; the companion .se
// file mirrors the layout with Monte Carlo standard errors; failures, when
// any, land in a .fail companion.
inline void write_report(const RejectionReport& rep, const std::string& path,
                         const std::string& header_lines) {
    {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IngestError("cannot write report '" + path + "'");
        out << header_lines;
        out << "# kind=" << test_kind_name(rep.grid.test_kind)
            << " T=" << rep.grid.T << " replications=" << rep.grid.replications
            << " seed=" << rep.grid.seed << "\n";
        out << "# total_replications=" << rep.total_replications << "\n";
        mc_detail::write_matrix(out, rep, rep.rate);
    }
    {
        std::ofstream out(path + ".se", std::ios::trunc);
        out << header_lines;
        mc_detail::write_matrix(out, rep, rep.mc_se);
    }
    long fails = 0;
    for (long f : rep.failures) fails += f;
    if (fails > 0) {
        std::ofstream out(path + ".fail", std::ios::trunc);
        out << header_lines;
        std::vector<double> f(rep.failures.begin(), rep.failures.end());
        mc_detail::write_matrix(out, rep, f);
    }
}

}  // namespace qpr

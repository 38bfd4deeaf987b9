#pragma once

// Time-series containers and the response/lagged-predictor alignment shared
// by every estimator. All types are immutable after construction.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qpr/errors.hpp"
#include "qpr/mathutil.hpp"

namespace qpr {

// Minimum usable sample for the estimation entry points. Keeps the kernel
// density and HAC pieces defined; test fixtures may bypass it.
constexpr std::size_t kMinSample = 20;

struct TimeSeries {
    std::vector<double> values;
    std::string label;
    std::optional<long> period;  // index of the first observation

    TimeSeries() = default;
    TimeSeries(std::vector<double> v, std::string name = {},
               std::optional<long> first_period = std::nullopt)
        : values(std::move(v)), label(std::move(name)), period(first_period) {
        if (values.size() < 2) throw DomainError("TimeSeries: length must be >= 2");
        for (double x : values)
            if (!std::isfinite(x))
                throw DomainError("TimeSeries '" + label + "': non-finite value");
    }

    std::size_t size() const { return values.size(); }
};

// Aligned (y_t, x_{t-1}) pairs plus the contemporaneous predictor level,
// which the fully modified correction needs for x_t - phi*x_{t-1}.
struct PredictiveDataset {
    std::vector<double> y;
    std::vector<double> x_lag;    // position t holds x_{t-1}
    std::vector<double> x_level;  // position t holds x_t
    std::size_t T = 0;

    // Full predictor path x_0..x_T (length T+1).
    std::vector<double> predictor_path() const {
        std::vector<double> x;
        x.reserve(T + 1);
        x.push_back(x_lag.front());
        x.insert(x.end(), x_level.begin(), x_level.end());
        return x;
    }
};

namespace detail {

inline void check_dataset(const PredictiveDataset& d, bool enforce_floor) {
    if (d.y.size() != d.T || d.x_lag.size() != d.T || d.x_level.size() != d.T)
        throw AlignmentError("PredictiveDataset: field lengths disagree with T");
    if (enforce_floor && d.T < kMinSample)
        throw SampleTooSmallError("PredictiveDataset: T < " + std::to_string(kMinSample));
    for (std::size_t t = 1; t < d.T; ++t)
        if (d.x_lag[t] != d.x_level[t - 1])
            throw AlignmentError("PredictiveDataset: x_lag[t] != x_level[t-1] at t=" +
                                 std::to_string(t));
}

}  // namespace detail

inline PredictiveDataset make_dataset(std::vector<double> y, std::vector<double> x_lag,
                                      std::vector<double> x_level, bool enforce_floor = true) {
    PredictiveDataset d;
    d.T = y.size();
    d.y = std::move(y);
    d.x_lag = std::move(x_lag);
    d.x_level = std::move(x_level);
    detail::check_dataset(d, enforce_floor);
    return d;
}

// Pairs y_t with x_{t-1}: from equal-length series of length L, the dataset
// keeps y_2..y_L against x_1..x_{L-1}, so T = L-1.
inline PredictiveDataset align_predictive(const TimeSeries& y, const TimeSeries& x,
                                          bool enforce_floor = true) {
    if (y.size() != x.size())
        throw AlignmentError("align_predictive: series lengths differ (" +
                             std::to_string(y.size()) + " vs " + std::to_string(x.size()) + ")");
    if (y.period && x.period && *y.period != *x.period)
        throw AlignmentError("align_predictive: period indices differ");
    const std::size_t L = y.size();
    if (enforce_floor && L < kMinSample + 1)
        throw SampleTooSmallError("align_predictive: need at least " +
                                  std::to_string(kMinSample + 1) + " observations, got " +
                                  std::to_string(L));
    PredictiveDataset d;
    d.T = L - 1;
    d.y.assign(y.values.begin() + 1, y.values.end());
    d.x_lag.assign(x.values.begin(), x.values.end() - 1);
    d.x_level.assign(x.values.begin() + 1, x.values.end());
    return d;
}

inline std::vector<double> demean(const std::vector<double>& s) {
    if (s.empty()) throw DomainError("demean: empty input");
    const double m = mean_of(s);
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i] - m;
    return out;
}

}  // namespace qpr

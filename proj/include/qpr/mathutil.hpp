#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "qpr/errors.hpp"

namespace qpr {

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) throw DomainError("mean_of: empty input");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Population variance (1/n). Matches the long-run identities used here.
inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) throw DomainError("sample_sd: need at least 2 values");
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Linear-interpolation quantile of an unsorted sample (R type 7).
inline double quantile_of(std::vector<double> v, double p) {
    if (v.empty()) throw DomainError("quantile_of: empty input");
    if (p < 0.0 || p > 1.0) throw DomainError("quantile_of: level outside [0,1]");
    std::sort(v.begin(), v.end());
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

// Same, for data already sorted ascending.
inline double quantile_sorted(const std::vector<double>& v, double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014327;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw DomainError("normal_quantile: level outside (0,1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

// Quantile of a Student-t rescaled to unit variance (df > 2).
inline double student_t_unit_quantile(double p, double df) {
    if (df <= 2.0) throw DomainError("student_t_unit_quantile: df must exceed 2");
    const double q = boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
    return q * std::sqrt((df - 2.0) / df);
}

// --- small symmetric 2x2 matrices -------------------------------------------

struct Mat2 {
    double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
    double det() const { return a11 * a22 - a12 * a21; }
    double trace() const { return a11 + a22; }

    Mat2 transpose() const { return {a11, a21, a12, a22}; }

    Mat2 operator+(const Mat2& o) const { return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22}; }
    Mat2 operator-(const Mat2& o) const { return {a11 - o.a11, a12 - o.a12, a21 - o.a21, a22 - o.a22}; }
    Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }

    Mat2 operator*(const Mat2& o) const {
        return {a11 * o.a11 + a12 * o.a21, a11 * o.a12 + a12 * o.a22,
                a21 * o.a11 + a22 * o.a21, a21 * o.a12 + a22 * o.a22};
    }

    Mat2 inverse() const {
        const double d = det();
        if (!std::isfinite(d) || std::fabs(d) < 1e-300) throw SandwichError("Mat2::inverse: singular matrix");
        return {a22 / d, -a12 / d, -a21 / d, a11 / d};
    }

    Mat2 symmetrized() const {
        const double off = 0.5 * (a12 + a21);
        return {a11, off, off, a22};
    }
};

// Floors the eigenvalues of a symmetric 2x2 at eps. Returns the number of
// eigenvalues that were raised.
inline int floor_eigenvalues(Mat2& m, double eps) {
    m = m.symmetrized();
    const double tr = m.trace();
    const double dt = m.det();
    double disc = tr * tr - 4.0 * dt;
    disc = disc > 0.0 ? std::sqrt(disc) : 0.0;
    double l1 = 0.5 * (tr + disc);
    double l2 = 0.5 * (tr - disc);
    if (l2 >= eps) return 0;

    // eigenvector for l1; handle the near-diagonal case directly
    double vx, vy;
    if (std::fabs(m.a12) > 1e-300) {
        vx = l1 - m.a22;
        vy = m.a12;
    } else {
        vx = m.a11 >= m.a22 ? 1.0 : 0.0;
        vy = m.a11 >= m.a22 ? 0.0 : 1.0;
    }
    const double nrm = std::hypot(vx, vy);
    vx /= nrm;
    vy /= nrm;

    int raised = 0;
    if (l1 < eps) {
        l1 = eps;
        ++raised;
    }
    l2 = eps;
    ++raised;
    const double ux = -vy, uy = vx;
    m.a11 = l1 * vx * vx + l2 * ux * ux;
    m.a12 = l1 * vx * vy + l2 * ux * uy;
    m.a21 = m.a12;
    m.a22 = l1 * vy * vy + l2 * uy * uy;
    return raised;
}

// --- misc --------------------------------------------------------------------

// Pool-adjacent-violators: least-squares isotonic (nondecreasing) fit.
inline std::vector<double> isotonic_increasing(const std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> level(n), weight(n);
    std::vector<std::size_t> len(n);
    std::size_t blocks = 0;
    for (std::size_t i = 0; i < n; ++i) {
        level[blocks] = y[i];
        weight[blocks] = 1.0;
        len[blocks] = 1;
        ++blocks;
        while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
            const double w = weight[blocks - 2] + weight[blocks - 1];
            level[blocks - 2] = (weight[blocks - 2] * level[blocks - 2] +
                                 weight[blocks - 1] * level[blocks - 1]) / w;
            weight[blocks - 2] = w;
            len[blocks - 2] += len[blocks - 1];
            --blocks;
        }
    }
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t b = 0; b < blocks; ++b)
        out.insert(out.end(), len[b], level[b]);
    return out;
}

// FNV-1a over raw bytes; used for provenance hashes in output headers.
inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace qpr

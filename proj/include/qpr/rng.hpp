#pragma once

// Counter-based random streams. Every Monte Carlo replication gets its own
// stream keyed by (seed, table kind, grid indices, replication index), so
// results are independent of how work is sharded across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>

namespace qpr {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint32_t mulhi32(std::uint32_t a, std::uint32_t b, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    return static_cast<std::uint32_t>(p >> 32);
}

}  // namespace detail

// Philox-4x32-10 block cipher over a 128-bit counter.
class Philox {
public:
    Philox(std::uint64_t key, std::uint64_t counter_hi) : counter_hi_(counter_hi) {
        key_[0] = static_cast<std::uint32_t>(key);
        key_[1] = static_cast<std::uint32_t>(key >> 32);
    }

    std::array<std::uint32_t, 4> block(std::uint64_t counter_lo) const {
        std::uint32_t c0 = static_cast<std::uint32_t>(counter_lo);
        std::uint32_t c1 = static_cast<std::uint32_t>(counter_lo >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(counter_hi_);
        std::uint32_t c3 = static_cast<std::uint32_t>(counter_hi_ >> 32);
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, lo1;
            const std::uint32_t hi0 = detail::mulhi32(0xD2511F53u, c0, lo0);
            const std::uint32_t hi1 = detail::mulhi32(0xCD9E8D57u, c2, lo1);
            const std::uint32_t n0 = hi1 ^ c1 ^ k0;
            const std::uint32_t n1 = lo1;
            const std::uint32_t n2 = hi0 ^ c3 ^ k1;
            const std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        return {c0, c1, c2, c3};
    }

private:
    std::array<std::uint32_t, 2> key_;
    std::uint64_t counter_hi_;
};

// One replication's stream: uniforms, normals (Box-Muller), chi-square.
class RngStream {
public:
    explicit RngStream(std::uint64_t key, std::uint64_t stream_id = 0)
        : philox_(key, stream_id) {}

    std::uint64_t next_u64() {
        if (word_ >= 4) {
            buf_ = philox_.block(block_++);
            word_ = 0;
        }
        const std::uint64_t lo = buf_[word_];
        const std::uint64_t hi = buf_[word_ + 1];
        word_ += 2;
        return (hi << 32) | lo;
    }

    // open interval (0,1)
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // chi-square with integer degrees of freedom
    double chi_square(int df) {
        double s = 0.0;
        for (int i = 0; i < df; ++i) {
            const double z = normal();
            s += z * z;
        }
        return s;
    }

    // standard normal pair with correlation rho
    std::pair<double, double> correlated_normals(double rho) {
        const double z1 = normal();
        const double z2 = normal();
        return {z1, rho * z1 + std::sqrt(1.0 - rho * rho) * z2};
    }

private:
    Philox philox_;
    std::array<std::uint32_t, 4> buf_{};
    std::uint64_t block_ = 0;
    int word_ = 4;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

// Derives a replication key from a seed and up to four grid coordinates.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t domain,
                                std::uint64_t i = 0, std::uint64_t j = 0,
                                std::uint64_t rep = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = detail::splitmix64(s);
    s ^= domain + 0x632BE59BD9B4E019ULL;
    h ^= detail::splitmix64(s);
    s ^= (i + 1) * 0xFF51AFD7ED558CCDULL;
    h ^= detail::splitmix64(s);
    s ^= (j + 1) * 0xC4CEB9FE1A85EC53ULL;
    h ^= detail::splitmix64(s);
    s ^= (rep + 1) * 0x2545F4914F6CDD1DULL;
    h ^= detail::splitmix64(s);
    return h;
}

// Stable small ids for keying independent random domains.
namespace rng_domain {
constexpr std::uint64_t z_table = 1;
constexpr std::uint64_t dfgls_table = 2;
constexpr std::uint64_t alpha1_table = 3;
constexpr std::uint64_t mc_experiment = 4;
constexpr std::uint64_t dgp = 5;
}  // namespace rng_domain

}  // namespace qpr

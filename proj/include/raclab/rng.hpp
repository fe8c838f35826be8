#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace raclab {

// Streams are derived from a master seed by hashing (seed, id...) with
// splitmix64. Each Monte Carlo trial owns its own stream, so results do not
// depend on how trials are split across threads.

inline std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids)
{
    std::uint64_t state = seed;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t id : ids) {
        state = h ^ (id + 0x632BE59BD9B4E019ULL);
        h = splitmix64(state);
    }
    return h;
}

/// xoshiro256** with splitmix64 seeding. Fully specified, so every platform
/// produces the same stream for the same seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
    {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    Rng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) : Rng(derive_seed(seed, ids)) {}

    std::uint64_t next()
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t n)
    {
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Inverse-CDF sampler over a finite pmf (normalized on construction).
class DiscreteSampler {
public:
    DiscreteSampler() = default;

    explicit DiscreteSampler(std::span<const double> pmf)
    {
        double total = 0.0;
        for (double p : pmf) total += p;
        cdf_.reserve(pmf.size());
        double acc = 0.0;
        for (double p : pmf) {
            acc += p / total;
            cdf_.push_back(acc);
        }
        // The last atom with positive mass absorbs rounding in the tail.
        for (std::size_t i = pmf.size(); i-- > 0;) {
            if (pmf[i] > 0.0) {
                for (std::size_t j = i; j < cdf_.size(); ++j) cdf_[j] = 2.0;
                break;
            }
        }
    }

    std::size_t operator()(Rng& rng) const
    {
        const double u = rng.uniform();
        std::size_t lo = 0;
        std::size_t hi = cdf_.size() - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cdf_[mid])
                hi = mid;
            else
                lo = mid + 1;
        }
        return lo;
    }

    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

}  // namespace raclab

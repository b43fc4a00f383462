#ifndef SHRINKT_RANDOM_HPP
#define SHRINKT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <random>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"

/**
 * @file random.hpp
 *
 * @brief Seeded random number generation and samplers.
 *
 * The engine is the 64-bit Mersenne Twister (`std::mt19937_64`), whose
 * output sequence is fixed by the C++ standard. None of the implementation-
 * defined `<random>` distributions are used: every sampler below is written
 * out explicitly, so a given seed produces bit-identical draws on every
 * conforming platform.
 *
 * - uniform: 53 high bits of one engine output, offset by half an ulp so the
 *   result lies strictly inside (0, 1).
 * - normal: inversion of one uniform through `normal_quantile()`.
 * - gamma: Marsaglia-Tsang squeeze; shape < 1 via the u^(1/shape) boost.
 * - binomial: recursive beta splitting down to n <= 40, then Bernoulli sums.
 * - poisson: recursive gamma splitting down to mean <= 30, then inversion.
 */

namespace shrinkt {

/**
 * SplitMix64 finalizer, used to derive independent child seeds.
 */
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/**
 * Combine a master seed with a sequence of indices into a child seed.
 */
inline uint64_t derive_seed(uint64_t master, std::initializer_list<uint64_t> indices) {
    uint64_t state = splitmix64(master);
    for (auto i : indices) {
        state = splitmix64(state ^ splitmix64(i + 0x632be59bd9b4e019ULL));
    }
    return state;
}

/**
 * Externally owned generator state. Not safe to share between threads.
 */
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /**
     * @return Uniform integer in [0, n).
     */
    uint64_t uniform_index(uint64_t n) {
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return r % n;
    }

private:
    std::mt19937_64 engine_;
};

inline double uniform_sample(double lower, double upper, Rng& rng) {
    return lower + (upper - lower) * rng.uniform();
}

inline double normal_sample(Rng& rng) {
    return normal_quantile(rng.uniform());
}

inline double normal_sample(double mean, double sd, Rng& rng) {
    return mean + sd * normal_sample(rng);
}

inline double gamma_sample(double shape, Rng& rng) {
    if (!(shape > 0)) {
        throw DomainError("gamma_sample: shape must be positive");
    }
    if (shape < 1) {
        const double boost = std::pow(rng.uniform(), 1 / shape);
        return gamma_sample(shape + 1, rng) * boost;
    }

    const double d = shape - 1.0 / 3;
    const double c = 1 / std::sqrt(9 * d);
    while (true) {
        const double x = normal_sample(rng);
        double v = 1 + c * x;
        if (v <= 0) {
            continue;
        }
        v = v * v * v;
        const double u = rng.uniform();
        if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
            return d * v;
        }
    }
}

inline double chisq_sample(double df, Rng& rng) {
    return 2 * gamma_sample(df / 2, rng);
}

/**
 * Draw from t_df; an infinite df yields a standard normal.
 */
inline double t_sample(double df, Rng& rng) {
    const double z = normal_sample(rng);
    if (std::isinf(df)) {
        return z;
    }
    return z / std::sqrt(chisq_sample(df, rng) / df);
}

inline double beta_sample(double a, double b, Rng& rng) {
    const double x = gamma_sample(a, rng);
    const double y = gamma_sample(b, rng);
    return x / (x + y);
}

inline uint64_t binomial_sample(uint64_t n, double p, Rng& rng) {
    if (!(p >= 0 && p <= 1)) {
        throw DomainError("binomial_sample: probability must lie in [0, 1]");
    }
    uint64_t successes = 0;
    while (n > 40) {
        if (p <= 0) {
            return successes;
        }
        if (p >= 1) {
            return successes + n;
        }
        // x is the a-th order statistic of n uniforms.
        const uint64_t a = 1 + n / 2;
        const uint64_t b = n + 1 - a;
        const double x = beta_sample(static_cast<double>(a), static_cast<double>(b), rng);
        if (x >= p) {
            n = a - 1;
            p /= x;
        } else {
            successes += a;
            n = b - 1;
            p = (p - x) / (1 - x);
        }
    }
    for (uint64_t i = 0; i < n; ++i) {
        successes += rng.uniform() < p;
    }
    return successes;
}

inline uint64_t poisson_sample(double mean, Rng& rng) {
    if (!(mean >= 0) || std::isinf(mean)) {
        throw DomainError("poisson_sample: mean must be finite and nonnegative");
    }
    uint64_t count = 0;
    while (mean > 30) {
        // Arrival time of the m-th event of a unit-rate process.
        const auto m = static_cast<uint64_t>(std::floor(0.875 * mean));
        const double arrival = gamma_sample(static_cast<double>(m), rng);
        if (arrival < mean) {
            count += m;
            mean -= arrival;
        } else {
            return count + binomial_sample(m - 1, mean / arrival, rng);
        }
    }

    const double limit = std::exp(-mean);
    double product = rng.uniform();
    while (product > limit) {
        ++count;
        product *= rng.uniform();
    }
    return count;
}

/**
 * Negative binomial with the given mean and dispersion phi, i.e. variance
 * mean + phi * mean^2, drawn as a gamma-Poisson mixture.
 */
inline uint64_t neg_binomial_sample(double mean, double dispersion, Rng& rng) {
    if (!(dispersion > 0)) {
        throw DomainError("neg_binomial_sample: dispersion must be positive");
    }
    const double shape = 1 / dispersion;
    const double rate = gamma_sample(shape, rng) * mean / shape;
    return poisson_sample(rate, rng);
}

/**
 * Uniformly random subset of size k from {0, ..., n-1}, in selection order
 * (partial Fisher-Yates).
 */
inline std::vector<size_t> sample_without_replacement(size_t n, size_t k, Rng& rng) {
    if (k > n) {
        throw DomainError("sample_without_replacement: k exceeds n");
    }
    std::vector<size_t> pool(n);
    std::iota(pool.begin(), pool.end(), size_t{0});
    for (size_t i = 0; i < k; ++i) {
        const size_t j = i + static_cast<size_t>(rng.uniform_index(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

}

#endif

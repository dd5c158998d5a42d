#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lexmrf {

// Random draws built on the standardized mt19937_64 engine. The transforms
// below are written out explicitly so that a given seed produces the same
// stream on every standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform on (0, 1); never returns 0 so log(u) is always finite.
    double uniform() {
        const std::uint64_t bits = engine_() >> 11; // top 53 bits
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Marsaglia's polar method.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    // Gamma(shape, rate) by Marsaglia-Tsang; the shape < 1 case uses the
    // usual u^(1/shape) boost.
    double gamma(double shape, double rate) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return d * v / rate;
        }
    }

    long long poisson(double mean) {
        if (mean <= 0.0)
            return 0;
        if (mean < 30.0) {
            // Knuth multiplication method.
            const double limit = std::exp(-mean);
            double prod = uniform();
            long long k = 0;
            while (prod > limit) {
                prod *= uniform();
                ++k;
            }
            return k;
        }
        // Split recursively: Poisson(m) = Poisson(m/2) + Poisson(m/2) would be
        // slow for huge means, so use the gamma-count reduction instead.
        // If Gamma(n,1) > mean then the count is below n; recurse on the rest.
        const long long n = static_cast<long long>(std::floor(0.875 * mean));
        const double g = gamma(static_cast<double>(n), 1.0);
        if (g > mean)
            return binomial_from_uniforms(n - 1, mean / g);
        return n + poisson(mean - g);
    }

    std::uint64_t raw() { return engine_(); }

  private:
    long long binomial_from_uniforms(long long n, double p) {
        // n is modest here (order of the mean); direct Bernoulli sum is fine
        // for the tail of the Poisson reduction but not for n in the millions,
        // so recurse through a Beta split first.
        if (n <= 64) {
            long long k = 0;
            for (long long i = 0; i < n; ++i)
                if (uniform() < p)
                    ++k;
            return k;
        }
        const long long a = n / 2;
        // Beta(a, n - a + 1) via two gammas.
        const double ga = gamma(static_cast<double>(a), 1.0);
        const double gb = gamma(static_cast<double>(n - a + 1), 1.0);
        const double x = ga / (ga + gb);
        if (p < x)
            return binomial_from_uniforms(a - 1, p / x);
        return a + binomial_from_uniforms(n - a, (p - x) / (1.0 - x));
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Mixes a master seed with stream indices (chain id, sweep, colour class)
// into an independent-looking seed. splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                 std::uint64_t c = 0) {
    std::uint64_t x = seed;
    for (std::uint64_t salt : {a + 1, b + 1, c + 1}) {
        x += 0x9e3779b97f4a7c15ULL * salt;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        x = x ^ (x >> 31);
    }
    return x;
}

} // namespace lexmrf

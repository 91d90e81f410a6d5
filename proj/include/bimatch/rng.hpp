#pragma once

#include <cmath>
#include <cstdint>
#include <random>

// Deterministic random draws. mt19937_64 output is fixed by the standard,
// and the distribution transforms below are our own, so a (seed, call
// sequence) pair produces the same stream on every platform. The standard
// library <random> distributions are implementation-defined and must not
// be used anywhere reproducibility matters.

namespace bimatch {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Combine a base seed with a stream index (e.g. replication number).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

// Inverse standard normal CDF, Acklam's rational approximation
// (absolute error < 1.15e-9 over (0,1)).
double norm_ppf(double p);

// Standard normal CDF via erfc.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform on (0,1), never exactly 0 or 1.
    double uniform() {
        const double u = (gen_() >> 11) * 0x1.0p-53;
        return u > 0.0 ? u : 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return norm_ppf(uniform()); }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Marsaglia-Tsang for shape >= 1, boosted for shape < 1.
    double gamma(double shape);

    double beta(double a, double b) {
        const double x = gamma(a);
        const double y = gamma(b);
        return x / (x + y);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace bimatch

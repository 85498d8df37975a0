#pragma once

// Independent reference computations used only by the tests. They trade speed and range
// for directness: closed-form pmfs in long double and exhaustive enumeration.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace oracle {

inline long double binomial_pmf(int n, int d, long double q) {
    long double c = 1.0L;
    for (int i = 1; i <= d; ++i) {
        c = c * (n - d + i) / i;
    }
    return c * std::pow(q, d) * std::pow(1.0L - q, n - d);
}

inline long double binomial_min_k(int n, long double q, int k) {
    long double e = 0.0L;
    for (int d = 0; d <= n; ++d) {
        e += std::min(d, k) * binomial_pmf(n, d, q);
    }
    return e;
}

inline long double binomial_lt(int n, long double q, int k) {
    long double s = 0.0L;
    for (int d = 0; d < k && d <= n; ++d) {
        s += binomial_pmf(n, d, q);
    }
    return s;
}

inline long double poisson_pmf(long double lambda, int d) {
    long double f = 1.0L;
    for (int i = 1; i <= d; ++i) {
        f *= lambda / i;
    }
    return std::exp(-lambda) * f;
}

inline long double poisson_min_k(long double lambda, int k) {
    long double e = 0.0L;
    long double below = 0.0L;
    for (int d = 0; d < k; ++d) {
        const long double p = poisson_pmf(lambda, d);
        e += d * p;
        below += p;
    }
    return e + k * (1.0L - below);
}

// Distribution of a Bernoulli sum by enumerating all 2^n outcomes.
inline std::vector<long double> bernoulli_sum_pmf(std::span<const double> p) {
    const std::size_t n = p.size();
    std::vector<long double> pmf(n + 1, 0.0L);
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
        long double w = 1.0L;
        int count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (mask >> i & 1U) {
                w *= p[i];
                ++count;
            } else {
                w *= 1.0L - p[i];
            }
        }
        pmf[static_cast<std::size_t>(count)] += w;
    }
    return pmf;
}

}  // namespace oracle

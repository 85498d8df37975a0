#include "prophetlab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prophetlab/errors.hpp"

namespace prophetlab::numerics {

namespace {

constexpr double kSeriesCutoff = 1e-16;

void require_slots(int k) {
    if (k < 1) {
        throw DomainError("slot count k must be at least 1, got " + std::to_string(k));
    }
}

// Lower partial sums of a count distribution: mass and first moment over d < k.
struct LowerSums {
    double mass = 0.0;
    double moment = 0.0;
    long double next_log_pmf = 0.0L;  // log pmf(k), ready for the upper series
};

struct CountSummary {
    double cdf_lt = 1.0;
    double expect_min = 0.0;
};

CountSummary binomial_summary(int n, double q, int k) {
    require_slots(k);
    if (n < 0) {
        throw DomainError("trial count must be nonnegative, got " + std::to_string(n));
    }
    q = checked_probability(q, "binomial success probability");
    if (k > n) {
        return {1.0, n * q};
    }
    if (q == 0.0) {
        return {1.0, 0.0};
    }
    if (q == 1.0) {
        return {0.0, static_cast<double>(k)};
    }

    const long double log_odds = std::log(static_cast<long double>(q)) - std::log1p(-static_cast<long double>(q));
    long double lp = n * std::log1p(-static_cast<long double>(q));
    LowerSums lower;
    for (int d = 0; d < k; ++d) {
        const double pmf = static_cast<double>(std::exp(lp));
        lower.mass += pmf;
        lower.moment += d * pmf;
        lp += std::log(static_cast<long double>(n - d)) - std::log(static_cast<long double>(d + 1)) + log_odds;
    }
    lower.next_log_pmf = lp;

    double upper;
    if (n * q < k) {
        // Terms are decreasing from d = k on; sum the small side directly.
        upper = 0.0;
        lp = lower.next_log_pmf;
        for (int d = k; d <= n; ++d) {
            const double term = static_cast<double>(std::exp(lp));
            upper += term;
            if (term < kSeriesCutoff * upper || term == 0.0) {
                break;
            }
            if (d < n) {
                lp += std::log(static_cast<long double>(n - d)) - std::log(static_cast<long double>(d + 1)) + log_odds;
            }
        }
    } else {
        upper = std::max(0.0, 1.0 - lower.mass);
    }
    return {std::clamp(lower.mass, 0.0, 1.0), lower.moment + k * upper};
}

double require_rate(double lambda) {
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw DomainError("Poisson mean must be finite and nonnegative, got " + std::to_string(lambda));
    }
    return lambda;
}

LowerSums poisson_lower(double lambda, int count) {
    const long double log_rate = std::log(static_cast<long double>(lambda));
    long double lp = -static_cast<long double>(lambda);
    LowerSums lower;
    for (int d = 0; d < count; ++d) {
        const double pmf = static_cast<double>(std::exp(lp));
        lower.mass += pmf;
        lower.moment += d * pmf;
        lp += log_rate - std::log(static_cast<long double>(d + 1));
    }
    lower.next_log_pmf = lp;
    return lower;
}

// Sum of weight(d) * pmf(d) over d >= start, for lambda below the start index.
template <class Weight>
double poisson_upper_series(double lambda, int start, long double log_pmf_start, Weight weight) {
    const long double log_rate = std::log(static_cast<long double>(lambda));
    long double lp = log_pmf_start;
    double sum = 0.0;
    const double burn_in = lambda + start + 10.0;
    for (long long d = start;; ++d) {
        const double term = weight(d) * static_cast<double>(std::exp(lp));
        sum += term;
        if (d > burn_in && (term < kSeriesCutoff * sum || term == 0.0)) {
            break;
        }
        lp += log_rate - std::log(static_cast<long double>(d + 1));
    }
    return sum;
}

CountSummary poisson_summary(double lambda, int k) {
    require_slots(k);
    require_rate(lambda);
    if (lambda == 0.0) {
        return {1.0, 0.0};
    }
    const LowerSums lower = poisson_lower(lambda, k);
    double upper;
    if (lambda < k) {
        upper = poisson_upper_series(lambda, k, lower.next_log_pmf, [](long long) { return 1.0; });
    } else {
        upper = std::max(0.0, 1.0 - lower.mass);
    }
    return {std::clamp(lower.mass, 0.0, 1.0), lower.moment + k * upper};
}

}  // namespace

double checked_probability(double q, std::string_view what) {
    if (std::isnan(q) || q < -kProbabilitySlack || q > 1.0 + kProbabilitySlack) {
        throw DomainError(std::string(what) + " must lie in [0,1], got " + std::to_string(q));
    }
    return std::clamp(q, 0.0, 1.0);
}

ProbVector::ProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
    for (double& p : probs_) {
        p = checked_probability(p, "Bernoulli probability");
    }
}

ProbVector ProbVector::constant(std::size_t n, double q) {
    return ProbVector(std::vector<double>(n, q));
}

double binom_min_k_expect(int n, double q, int k) {
    return binomial_summary(n, q, k).expect_min;
}

double binom_cdf_lt(int n, double q, int k) {
    return binomial_summary(n, q, k).cdf_lt;
}

double poisbin_min_k_expect(const ProbVector& p, int k) {
    TruncatedCount count(k);
    for (double pi : p.values()) {
        count.add(pi);
    }
    return count.expected_min_k();
}

double poisbin_cdf_lt(const ProbVector& p, int k) {
    TruncatedCount count(k);
    for (double pi : p.values()) {
        count.add(pi);
    }
    return count.prob_below_k();
}

double pois_min_k_expect(double lambda, int k) {
    return poisson_summary(lambda, k).expect_min;
}

double pois_cdf_lt(double lambda, int k) {
    return poisson_summary(lambda, k).cdf_lt;
}

double pois_tail_gt(double lambda, int k) {
    require_slots(k);
    require_rate(lambda);
    if (lambda == 0.0) {
        return 0.0;
    }
    const LowerSums lower = poisson_lower(lambda, k + 1);
    if (lambda < k + 1) {
        return poisson_upper_series(lambda, k + 1, lower.next_log_pmf, [](long long) { return 1.0; });
    }
    return std::max(0.0, 1.0 - lower.mass);
}

double pois_excess_expect(double lambda, int k) {
    require_slots(k);
    require_rate(lambda);
    if (lambda == 0.0) {
        return 0.0;
    }
    if (lambda < k + 1) {
        const LowerSums lower = poisson_lower(lambda, k + 1);
        return poisson_upper_series(lambda, k + 1, lower.next_log_pmf,
                                    [k](long long d) { return static_cast<double>(d - k); });
    }
    return std::max(0.0, lambda - pois_min_k_expect(lambda, k));
}

TruncatedCount::TruncatedCount(int k) {
    require_slots(k);
    mass_.assign(static_cast<std::size_t>(k), 0.0);
    mass_[0] = 1.0;
}

void TruncatedCount::add(double p) {
    p = checked_probability(p, "Bernoulli probability");
    const std::size_t top = mass_.size() - 1;
    tail_ += mass_[top] * p;
    for (std::size_t c = top; c > 0; --c) {
        mass_[c] = mass_[c] * (1.0 - p) + mass_[c - 1] * p;
    }
    mass_[0] *= 1.0 - p;
}

double TruncatedCount::prob_below_k() const noexcept {
    double below = 0.0;
    for (double m : mass_) {
        below += m;
    }
    return std::clamp(below, 0.0, 1.0);
}

double TruncatedCount::expected_min_k() const noexcept {
    double e = 0.0;
    for (std::size_t c = 1; c < mass_.size(); ++c) {
        e += static_cast<double>(c) * mass_[c];
    }
    return e + static_cast<double>(mass_.size()) * tail_;
}

std::vector<double> prefix_availability(std::span<const double> p, int k) {
    TruncatedCount count(k);
    std::vector<double> avail;
    avail.reserve(p.size());
    for (double pi : p) {
        avail.push_back(count.prob_below_k());
        count.add(pi);
    }
    return avail;
}

}  // namespace prophetlab::numerics

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace prophetlab::numerics {

// Values within this distance of [0,1] are clamped; anything further is a DomainError.
inline constexpr double kProbabilitySlack = 1e-12;

double checked_probability(double q, std::string_view what = "probability");

// Success probabilities of independent Bernoulli variables.
class ProbVector {
public:
    ProbVector() = default;
    explicit ProbVector(std::vector<double> probs);

    static ProbVector constant(std::size_t n, double q);

    [[nodiscard]] std::span<const double> values() const noexcept { return probs_; }
    [[nodiscard]] std::size_t size() const noexcept { return probs_.size(); }
    [[nodiscard]] bool empty() const noexcept { return probs_.empty(); }
    double operator[](std::size_t i) const { return probs_[i]; }

private:
    std::vector<double> probs_;
};

// E[min{Bin(n,q),k}] and Pr[Bin(n,q) < k].
double binom_min_k_expect(int n, double q, int k);
double binom_cdf_lt(int n, double q, int k);

// Same quantities for a sum of independent Bernoulli(p_i).
double poisbin_min_k_expect(const ProbVector& p, int k);
double poisbin_cdf_lt(const ProbVector& p, int k);

// Same quantities for Pois(lambda).
double pois_min_k_expect(double lambda, int k);
double pois_cdf_lt(double lambda, int k);
// Pr[Pois(lambda) > k] and E[(Pois(lambda) - k)^+], both summed on the upper tail.
double pois_tail_gt(double lambda, int k);
double pois_excess_expect(double lambda, int k);

// Count distribution of a growing sum of Bernoulli variables, truncated at k.
// masses()[c] = Pr[count = c] for c < k; tail() = Pr[count >= k].
class TruncatedCount {
public:
    explicit TruncatedCount(int k);

    void add(double p);

    [[nodiscard]] double prob_below_k() const noexcept;
    [[nodiscard]] double expected_min_k() const noexcept;
    [[nodiscard]] double tail() const noexcept { return tail_; }
    [[nodiscard]] std::span<const double> masses() const noexcept { return mass_; }
    [[nodiscard]] int k() const noexcept { return static_cast<int>(mass_.size()); }

private:
    std::vector<double> mass_;
    double tail_ = 0.0;
};

// avail[i] = Pr[sum_{i' < i} Ber(p_i') < k] for every prefix of p.
std::vector<double> prefix_availability(std::span<const double> p, int k);

}  // namespace prophetlab::numerics

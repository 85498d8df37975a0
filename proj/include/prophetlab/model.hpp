#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "prophetlab/matrix.hpp"

namespace prophetlab::model {

inline constexpr double kRowSumTolerance = 1e-12;

// A k-unit prophet-inequality instance: n agents arrive in order 1..n, agent i draws type j
// with probability probs(i, j), and type j is worth values[j] (nonincreasing in j).
class Instance {
public:
    // Validates every invariant and throws ValidationError naming the offending entry.
    Instance(int k, std::vector<double> values, Matrix probs);

    [[nodiscard]] int k() const noexcept { return k_; }
    [[nodiscard]] int n() const noexcept { return probs_.rows(); }
    [[nodiscard]] int m() const noexcept { return probs_.cols(); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] const Matrix& probs() const noexcept { return probs_; }

    // gains()[j] = values[j] - values[j+1], with a zero value past the last type.
    [[nodiscard]] std::vector<double> gains() const;
    [[nodiscard]] Matrix cumulative() const;
    [[nodiscard]] double expected_value(int agent) const;

private:
    int k_;
    std::vector<double> values_;
    Matrix probs_;
};

// The ordinal part of an instance: G(i, j) = Pr[agent i has type j or better].
class TypeDistributions {
public:
    explicit TypeDistributions(Matrix cumulative);
    static TypeDistributions from_instance(const Instance& inst);

    [[nodiscard]] int n() const noexcept { return g_.rows(); }
    [[nodiscard]] int m() const noexcept { return g_.cols(); }
    [[nodiscard]] const Matrix& matrix() const noexcept { return g_; }
    double operator()(int i, int j) const { return g_(i, j); }
    // G(i, j) with G(i, -1) = 0.
    [[nodiscard]] double at_or_zero(int i, int j) const { return j < 0 ? 0.0 : g_(i, j); }
    [[nodiscard]] double prob(int i, int j) const { return g_(i, j) - at_or_zero(i, j - 1); }

    [[nodiscard]] Matrix probabilities() const;
    [[nodiscard]] std::vector<double> column(int j) const;

private:
    Matrix g_;
};

// Accept types better than `type` outright, type `type` itself with probability rho.
// Type indices are 0-based.
struct StaticThreshold {
    int type = 0;
    double rho = 1.0;
};

// tau[i] = (1 - rho) G(i, type - 1) + rho G(i, type): the probability agent i clears the bar.
std::vector<double> acceptance_probabilities(const TypeDistributions& g, StaticThreshold rule);

double proph_value(const Instance& inst);
double proph_value_bruteforce(const Instance& inst);
double exante_value(const Instance& inst);
double dp_value(const Instance& inst);
double st_value(const Instance& inst, StaticThreshold rule);

struct ThresholdChoice {
    StaticThreshold rule;
    double value = 0.0;
};
ThresholdChoice best_st(const Instance& inst);

// Optimal online policy: accept agent i's type j with l slots left iff values[j] >= cost(i, l-1).
struct DpPolicy {
    Matrix opportunity_cost;  // n x k
};
DpPolicy dp_policy(const Instance& inst);

using Policy = std::variant<DpPolicy, StaticThreshold>;

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    long trials = 0;
};

// Counter-based sampling: the draw for (trial, agent) depends only on the seed and the
// counters, so any partition of trials into batches reproduces the same estimate.
MonteCarloEstimate simulate_policy(const Instance& inst, const Policy& policy, long trials, std::uint64_t seed);
double counter_uniform(std::uint64_t seed, std::uint64_t trial, std::uint64_t agent, std::uint64_t stream);

// Instance files: {"k","n","m","values":[...],"probs":[[...],...]}.
Instance parse_instance_json(const std::string& text);
Instance load_instance(const std::filesystem::path& path);
std::string instance_to_json(const Instance& inst);

// G-only files: {"k","n","m","G":[[...],...]}.
struct GFile {
    int k = 1;
    TypeDistributions g;
};
GFile parse_g_json(const std::string& text);
GFile load_g_file(const std::filesystem::path& path);

}  // namespace prophetlab::model

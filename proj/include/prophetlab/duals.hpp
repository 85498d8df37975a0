#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prophetlab/lp.hpp"
#include "prophetlab/matrix.hpp"
#include "prophetlab/model.hpp"

namespace prophetlab::duals {

using model::StaticThreshold;
using model::TypeDistributions;

enum class Benchmark { Proph, ExAnte };
enum class PolicyClass { DP, ST, OST };

const char* to_string(Benchmark b);
const char* to_string(PolicyClass p);
// Case-insensitive; throws ValidationError on anything else.
Benchmark parse_benchmark(std::string_view text);
PolicyClass parse_policy(std::string_view text);

// Q[j]: expected number of agents of type j or better the benchmark accepts.
struct CoverageTargets {
    std::vector<double> q;
    Benchmark benchmark = Benchmark::Proph;
};

CoverageTargets coverage_targets(const TypeDistributions& g, int k, Benchmark benchmark);

// Types that carry their own coverage row: positive mass and a positive target.
std::vector<int> active_types(const TypeDistributions& g, const CoverageTargets& targets);

// A point of the slot-depletion polytope. x(i, l-1) is the probability agent i arrives with
// l slots left and y(i, l-1) the probability it is accepted in that state.
struct DualSolution {
    double theta = 0.0;
    Matrix x;
    Matrix y;

    [[nodiscard]] int n() const noexcept { return x.rows(); }
    [[nodiscard]] int k() const noexcept { return x.cols(); }
    // Largest violation of the flow equations, the start state and 0 <= y <= x.
    [[nodiscard]] double polytope_residual() const;
    // sum over i, l of min{y(i,l), weight[i] x(i,l)}.
    [[nodiscard]] double coverage(std::span<const double> weight) const;
    // The flow equations determine x from y.
    static DualSolution from_acceptance(double theta, Matrix y);
};

// max_j (theta Q_j - coverage_j)^+ over every type with a positive target.
double coverage_violation(const DualSolution& sol, const TypeDistributions& g, const CoverageTargets& targets);

struct DualResult {
    double theta = 0.0;
    DualSolution certificate;
    lp::SolveStats stats;
};

DualResult inner_dual_dp(const TypeDistributions& g, int k, Benchmark benchmark);
// The same LP with acceptance forced to y = tau x for the given threshold.
DualResult inner_dual_ost_lp(const TypeDistributions& g, int k, Benchmark benchmark, StaticThreshold rule);

struct PrimalInnerSolution {
    double objective = 0.0;
    std::vector<double> gains;  // valuation gains, one per type
    Matrix value_to_go;         // n x k, column l-1 for l slots
    std::vector<Matrix> utility;  // utility[l-1] is n x m
    lp::SolveStats stats;
};

PrimalInnerSolution primal_inner_dp(const TypeDistributions& g, int k, Benchmark benchmark);

// The instance whose values are the suffix sums of `gains` and whose types follow g.
model::Instance instance_from_gains(const TypeDistributions& g, int k, std::span<const double> gains);

// Threshold acceptance plan: y = tau x with x the slot distribution it induces.
DualSolution ost_certificate(const TypeDistributions& g, int k, StaticThreshold rule);
double ost_theta(const TypeDistributions& g, int k, StaticThreshold rule, Benchmark benchmark);

struct OstChoice {
    StaticThreshold rule;
    double theta = 0.0;
};
OstChoice ost_best(const TypeDistributions& g, int k, Benchmark benchmark);

struct MixtureComponent {
    StaticThreshold rule;
    double weight = 0.0;
};

struct MixtureResult {
    double theta = 0.0;
    std::vector<MixtureComponent> support;
    int candidates = 0;
    lp::SolveStats stats;
};

MixtureResult st_mixture_theta(const TypeDistributions& g, int k, Benchmark benchmark, int rho_grid_size = 101);

// Balanced contention resolution for ex-ante marginals g: each agent is accepted with
// probability at least theta g_i.
DualResult ocrs_value(std::span<const double> marginals, int k);

struct OcrsSearchResult {
    std::vector<double> marginals;
    double theta = 1.0;
    long evaluations = 0;
    bool exhausted = false;
};

// Minimum of ocrs_value over the grid {0, step, ..., 1}^n with sum <= k. Enumerates when the
// grid has at most `budget` points, else runs coordinate search until the budget is spent.
OcrsSearchResult ocrs_worst_g(int n, int k, double step, long budget = 2'000'000);

struct GuaranteeReport {
    std::string policy;
    std::string benchmark;
    double theta = 0.0;
    std::optional<double> theta_low;
    std::optional<double> theta_high;
    bool certified = true;
    std::string method;
    std::optional<StaticThreshold> rule;
    std::vector<MixtureComponent> mixture;
    std::optional<DualSolution> certificate;
    double polytope_residual = 0.0;
    double coverage_residual = 0.0;
    lp::SolveStats stats;
};

std::string to_json(const GuaranteeReport& report, int indent = 2);

// The full report for a policy class on fixed type distributions.
GuaranteeReport guarantee_report(const TypeDistributions& g, int k, PolicyClass policy, Benchmark benchmark);

}  // namespace prophetlab::duals

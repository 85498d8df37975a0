#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "prophetlab/duals.hpp"
#include "prophetlab/model.hpp"

namespace prophetlab::noniid {

using duals::Benchmark;
using duals::PolicyClass;
using model::TypeDistributions;

struct FixedPointResult {
    int k = 1;
    int n = 0;               // 0 for the Poisson limit
    double parameter = 0.0;  // acceptance probability rho, or the Poisson mean lambda
    double alpha = 0.0;
    double residual = 0.0;   // |availability - fill share| at the returned parameter
};

// sup over rho of min{Pr[Bin(n-1, rho) < k], E[min{Bin(n-1, rho), k}] / k}, attained where the
// decreasing availability meets the increasing fill share.
FixedPointResult bernopt_equal(int n, int k, double tol = 1e-13);

// The lambda with Pr[Pois(lambda) < k] = E[min{Pois(lambda), k}] / k.
FixedPointResult poisson_fixed_point(int k, double tol = 1e-13);

struct RateRow {
    int k = 2;
    double lambda = 0.0;
    double alpha = 0.0;
    double scaled_gap = 0.0;  // (1 - alpha) sqrt(k / ln k)
};

std::vector<RateRow> rate_table(std::span<const int> k_values, int jobs = 1);
std::string rate_table_csv(std::span<const RateRow> rows);

struct Band {
    double low = 0.0;
    double high = 0.0;
};
Band scaled_gap_band(std::span<const RateRow> rows);

// n-1 agents surely of the middle type, then one agent of the top type with probability eps;
// the third type is worthless.
TypeDistributions one_type_instance(int n, double eps);

// Dual value of the policy class on fixed type distributions.
double dual_value(const TypeDistributions& g, int k, PolicyClass policy, Benchmark benchmark);

struct SearchOptions {
    int types = 3;           // including the worthless last type
    double step = 0.05;
    int restarts = 20;
    int refine_factor = 5;
    long budget = 20'000;    // dual evaluations over all restarts and the refinement
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct SearchResult {
    TypeDistributions g;
    double theta = 1.0;
    long evaluations = 0;
    bool exhausted = false;
};

// Local search for the G minimizing the dual value: coordinate descent over a grid from random
// starts, then a finer pass around the best point. Exploration only; nothing is certified.
SearchResult worst_case_search(int n, int k, PolicyClass policy, Benchmark benchmark,
                               const SearchOptions& options = {});

}  // namespace prophetlab::noniid

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prophetlab/duals.hpp"
#include "prophetlab/lp.hpp"

namespace prophetlab::iid {

using duals::Benchmark;
using duals::PolicyClass;

// Grid K on (0,1] for the IID coverage constraints. q[0] = 1 and q decreases; adjacent
// points lose at most a (1 - epsilon) factor of E[min{Bin(n,q),k}], and the last point
// is small enough that E[(Pois(n q) - k)^+] <= n q epsilon.
struct Discretization {
    int n = 0;
    int k = 0;
    double epsilon = 0.0;
    std::vector<double> q;
    std::vector<double> expected_fill;  // E[min{Bin(n,q),k}] at each grid point

    [[nodiscard]] std::size_t size() const noexcept { return q.size(); }
};

Discretization build_discretization(int n, int k, double epsilon);

// Q(q) for the benchmark: E[min{Bin(n,q),k}] or min{nq, k}.
double iid_target(int n, int k, double q, Benchmark benchmark);

enum class Method {
    Auto,       // closed forms and the k = 1 recursion where they apply
    Lp,         // always solve the discretized LP
};

enum class Formulation {
    Cuts,       // linear cuts at stabilized master plans
    Auxiliary,  // one auxiliary variable per (grid point, agent, slot) for active grid points
};

struct IidOptions {
    Method method = Method::Auto;
    Formulation formulation = Formulation::Cuts;
    double tol = 1e-9;
    int max_rounds = 20000;
    int max_cuts_per_round = 10;
    int tau_grid = 1000;
};

struct IidGuarantee {
    double theta = 0.0;
    double theta_low = 0.0;
    double theta_high = 0.0;
    bool certified = false;
    std::string method;
    std::size_t grid_size = 0;
    int rounds = 0;
    std::vector<double> active_q;
    std::optional<double> tau;
    std::vector<std::pair<double, double>> mixture;  // (tau, weight)
    std::optional<duals::DualSolution> certificate;
    lp::SolveStats stats;
};

IidGuarantee iid_guarantee(int n, int k, double epsilon, PolicyClass policy, Benchmark benchmark,
                           const IidOptions& options = {});

// E[min{Bin(n,k/n),k}] / k.
double iid_static_value(int n, int k);

// Coverage of the single-rate plan tau at grid point q: min{tau, q} E[min{Bin(n,tau),k}] / tau.
double rate_coverage(int n, int k, double tau, double q);
// The rate whose expected fill is the average of the endpoints' fills.
double tau_merge(double tau_low, double tau_high, int n, int k);

struct KertzPath {
    int n = 1;
    double theta = 1.0;
    std::vector<double> z;
};

// theta such that z_{I+1} = ((n-1)/n) z_I^{n/(n-1)} - 1/(n theta) + 1/n from z_0 = 1 ends at z_n = 0.
KertzPath kertz_recursion(int n, double tol = 1e-12);
// Acceptance probabilities y_1..y_n of the single-slot plan the path encodes.
std::vector<double> reverse_substitution(const KertzPath& path);
// max over q in the grid of (1-(1-q)^n) theta - sum_i min{y_i, q (1 - sum_{i'<i} y_i')}.
double single_slot_violation(std::span<const double> y, int n, double theta, std::span<const double> q_grid);

// Root in theta of int_0^1 dH / (1/theta - 1 + H (1 - ln H)) = 1.
double hill_kertz_constant(double tol = 1e-10);

struct Table1Row {
    int k = 1;
    int n = 1;
    double epsilon = 0.0;
    double theta_low = 0.0;
    double theta_high = 0.0;
    std::optional<double> reference;
    bool certified = false;
    double runtime_ms = 0.0;
};

// Published n = 8000 guarantees for k = 1..10.
std::optional<double> reference_guarantee(int k);

std::vector<Table1Row> table1(int k_max, std::span<const int> n_values, double epsilon, int jobs = 1);
std::string table1_csv(std::span<const Table1Row> rows);
// One polyline per k of theta_high against log2 n.
std::string table1_svg(std::span<const Table1Row> rows);

}  // namespace prophetlab::iid

#include "prophetlab/iid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "prophetlab/errors.hpp"
#include "prophetlab/format.hpp"
#include "prophetlab/numerics.hpp"
#include "prophetlab/parallel.hpp"
#include "prophetlab/search1d.hpp"

namespace prophetlab::iid {

namespace {

constexpr std::size_t kMaxGridPoints = 5'000'000;
// Larger markets start from the stretched solution for half as many agents.
constexpr int kDirectAgents = 24;
// Weight of the best plan so far in the separation point.
constexpr double kCenterWeight = 0.85;
constexpr double kInitialBox = 0.2;
constexpr int kPurgeAfterRounds = 5;

// E[(k - Bin(n, q))^+], summed over the lower pmf.
double unfilled_slots(int n, double q, int k) {
    if (q >= 1.0) return std::max(0, k - n);
    const double log_odds = std::log(q) - std::log1p(-q);
    double log_pmf = n * std::log1p(-q);
    double total = 0.0;
    for (int d = 0; d < std::min(k, n + 1); ++d) {
        total += (k - d) * std::exp(log_pmf);
        log_pmf += std::log(static_cast<double>(n - d) / (d + 1)) + log_odds;
    }
    return total;
}

void check_market(int n, int k) {
    if (k < 1) {
        throw DomainError("k must be at least 1, got " + std::to_string(k));
    }
    if (n <= k) {
        throw DomainError("need n > k, got n = " + std::to_string(n) + ", k = " + std::to_string(k));
    }
}

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw DomainError("epsilon must lie in (0,1)");
    }
}

// Grid used for certification: the discretization plus the fair-share rate k/n.
struct CoverageGrid {
    std::vector<double> q;
    std::vector<double> target;
};

CoverageGrid certification_grid(int n, int k, double epsilon, Benchmark benchmark) {
    const Discretization d = build_discretization(n, k, epsilon);
    CoverageGrid grid;
    grid.q = d.q;
    const double share = static_cast<double>(k) / n;
    grid.q.insert(std::upper_bound(grid.q.begin(), grid.q.end(), share, std::greater<>()), share);
    grid.q.erase(std::unique(grid.q.begin(), grid.q.end()), grid.q.end());
    grid.target.reserve(grid.q.size());
    for (double q : grid.q) grid.target.push_back(iid_target(n, k, q, benchmark));
    return grid;
}

std::size_t grid_index(const CoverageGrid& grid, double q) {
    return static_cast<std::size_t>(std::distance(
        grid.q.begin(), std::lower_bound(grid.q.begin(), grid.q.end(), q, std::greater<>())));
}

int acceptance_col(int i, int l, int k) { return 1 + i * k + l; }

duals::DualSolution plan_from(const lp::LpSolution& sol, int n, int k, double theta) {
    Matrix y(n, k);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            y(i, l) = std::max(0.0, sol.primal[static_cast<std::size_t>(acceptance_col(i, l, k))]);
        }
    }
    return duals::DualSolution::from_acceptance(theta, std::move(y));
}

// Coverage sum_{i,l} min{y, q x} at every grid point, from the states sorted by rate y/x.
std::vector<double> coverage_profile(const duals::DualSolution& plan, std::span<const double> q_desc) {
    struct State {
        double rate, y, x;
    };
    std::vector<State> states;
    double total_x = 0.0;
    for (int i = 0; i < plan.n(); ++i) {
        for (int l = 0; l < plan.k(); ++l) {
            const double x = plan.x(i, l);
            if (x <= 0.0) continue;
            states.push_back({plan.y(i, l) / x, plan.y(i, l), x});
            total_x += x;
        }
    }
    std::sort(states.begin(), states.end(), [](const State& a, const State& b) { return a.rate < b.rate; });
    std::vector<double> out(q_desc.size());
    std::size_t below = 0;
    double y_below = 0.0;
    double x_above = total_x;
    for (std::size_t t = q_desc.size(); t-- > 0;) {
        const double q = q_desc[t];
        while (below < states.size() && states[below].rate <= q) {
            y_below += states[below].y;
            x_above -= states[below].x;
            ++below;
        }
        out[t] = y_below + q * std::max(0.0, x_above);
    }
    return out;
}

std::vector<double> coverage_ratios(const duals::DualSolution& plan, const CoverageGrid& grid) {
    std::vector<double> r = coverage_profile(plan, grid.q);
    for (std::size_t t = 0; t < r.size(); ++t) r[t] /= grid.target[t];
    return r;
}

// Grid indices that are local minima of r and fall below theta by more than tol, worst first.
std::vector<std::size_t> violated_minima(std::span<const double> r, double theta, double tol) {
    std::vector<std::size_t> out;
    for (std::size_t t = 0; t < r.size(); ++t) {
        const bool left = t == 0 || r[t] <= r[t - 1];
        const bool right = t + 1 == r.size() || r[t] <= r[t + 1];
        if (left && right && theta - r[t] > tol) out.push_back(t);
    }
    std::stable_sort(out.begin(), out.end(), [&](std::size_t a, std::size_t b) { return r[a] < r[b]; });
    return out;
}

// theta Q(q) <= sum_{S} y + q sum_{not S} x, with S the states where y <= q x at `plan`.
// Equal to the coverage constraint at `plan` and valid everywhere since each min is concave.
struct Cut {
    std::vector<lp::Term> terms;
    double rhs = 0.0;
};

Cut linear_cut(const duals::DualSolution& plan, double q, double target) {
    const int n = plan.n();
    const int k = plan.k();
    Matrix coef(n, k);
    // below[l] counts later agents whose state (., l) is outside S.
    std::vector<double> below(static_cast<std::size_t>(k), 0.0);
    double rhs = 0.0;
    for (int i = n - 1; i >= 0; --i) {
        for (int l = 0; l < k; ++l) {
            const double c = below[static_cast<std::size_t>(l)];
            coef(i, l) += q * c;
            if (l + 1 < k) coef(i, l + 1) -= q * c;
        }
        for (int l = 0; l < k; ++l) {
            if (plan.y(i, l) <= q * plan.x(i, l)) {
                coef(i, l) -= 1.0;
            } else {
                below[static_cast<std::size_t>(l)] += 1.0;
                if (l == k - 1) rhs += q;
            }
        }
    }
    Cut cut;
    cut.rhs = rhs;
    cut.terms.push_back({0, target});
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            if (coef(i, l) != 0.0) cut.terms.push_back({acceptance_col(i, l, k), coef(i, l)});
        }
    }
    return cut;
}

lp::LinearProgram acceptance_master(int n, int k) {
    lp::LinearProgram lp(lp::ObjectiveSense::Maximize);
    lp.add_variable(0.0, 1.0, 1.0, "theta");
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            lp.add_variable(0.0, 1.0, 0.0, "y_" + std::to_string(i + 1) + "_" + std::to_string(l + 1));
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            std::vector<lp::Term> row{{acceptance_col(i, l, k), 1.0}};
            for (int prev = 0; prev < i; ++prev) {
                row.push_back({acceptance_col(prev, l, k), 1.0});
                if (l + 1 < k) row.push_back({acceptance_col(prev, l + 1, k), -1.0});
            }
            lp.add_row(row, lp::RowSense::LessEqual, l == k - 1 ? 1.0 : 0.0, "reach");
        }
    }
    return lp;
}

// The plan accepting every arrival with probability tau while slots remain.
duals::DualSolution rate_plan(int n, int k, double tau) {
    Matrix y(n, k);
    std::vector<double> accepted(static_cast<std::size_t>(k), 0.0);
    accepted[0] = 1.0;
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < k; ++c) y(i, k - 1 - c) = tau * accepted[static_cast<std::size_t>(c)];
        for (int c = k - 1; c >= 0; --c) {
            const auto uc = static_cast<std::size_t>(c);
            accepted[uc] = accepted[uc] * (1.0 - tau) + (c > 0 ? accepted[uc - 1] * tau : 0.0);
        }
    }
    return duals::DualSolution::from_acceptance(0.0, std::move(y));
}

void add_auxiliary_constraint(lp::MasterProblem& master, int n, int k, double q, double target) {
    std::vector<lp::Term> cover{{0, target}};
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            const int t = master.add_variable(0.0, lp::kInfinity, 0.0);
            const std::vector<lp::Term> by_acceptance{{t, 1.0}, {acceptance_col(i, l, k), -1.0}};
            master.add_row(by_acceptance, lp::RowSense::LessEqual, 0.0);
            std::vector<lp::Term> by_state{{t, 1.0}};
            for (int prev = 0; prev < i; ++prev) {
                by_state.push_back({acceptance_col(prev, l, k), q});
                if (l + 1 < k) by_state.push_back({acceptance_col(prev, l + 1, k), -q});
            }
            master.add_row(by_state, lp::RowSense::LessEqual, l == k - 1 ? q : 0.0);
            cover.push_back({t, -1.0});
        }
    }
    master.add_row(cover, lp::RowSense::LessEqual, 0.0);
}

double min_ratio(const duals::DualSolution& plan, const CoverageGrid& grid) {
    const std::vector<double> r = coverage_ratios(plan, grid);
    return std::min(1.0, *std::min_element(r.begin(), r.end()));
}

// The plan accepting at state (i, l) with probability rate(i, l) whenever that state is reached.
duals::DualSolution plan_from_rates(const Matrix& rate) {
    const int n = rate.rows();
    const int k = rate.cols();
    Matrix y(n, k);
    std::vector<double> occupancy(static_cast<std::size_t>(k), 0.0);  // indexed by column l
    occupancy[static_cast<std::size_t>(k - 1)] = 1.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> following(occupancy.size(), 0.0);
        for (int l = 0; l < k; ++l) {
            const auto ul = static_cast<std::size_t>(l);
            y(i, l) = rate(i, l) * occupancy[ul];
            following[ul] += occupancy[ul] - y(i, l);
            if (l > 0) following[ul - 1] += y(i, l);
        }
        occupancy = std::move(following);
    }
    return duals::DualSolution::from_acceptance(0.0, std::move(y));
}

// Rates of `plan` stretched to n agents: agent i follows agent i * n_old / n of the old plan at
// the rate scaled by n_old / n, and the last agent accepts whatever it finds.
Matrix stretched_rates(const duals::DualSolution& plan, int n) {
    const int old_n = plan.n();
    const int k = plan.k();
    Matrix old_rate(old_n, k);
    for (int l = 0; l < k; ++l) {
        double last = 0.0;
        for (int i = 0; i < old_n; ++i) {
            if (plan.x(i, l) > 1e-14) last = std::clamp(plan.y(i, l) / plan.x(i, l), 0.0, 1.0);
            old_rate(i, l) = last;
        }
    }
    const double scale = static_cast<double>(old_n) / n;
    Matrix rate(n, k);
    for (int i = 0; i < n; ++i) {
        const int src = std::min(old_n - 1, static_cast<int>(static_cast<long>(i) * old_n / n));
        for (int l = 0; l < k; ++l) rate(i, l) = i + 1 == n ? 1.0 : std::min(1.0, old_rate(src, l) * scale);
    }
    return rate;
}

double cut_violation(const Cut& cut, const lp::LpSolution& sol) {
    double lhs = -cut.rhs;
    for (const lp::Term& t : cut.terms) lhs += t.value * sol.primal[static_cast<std::size_t>(t.col)];
    return lhs;
}

duals::DualSolution blend(const duals::DualSolution& a, const duals::DualSolution& b, double weight_a) {
    Matrix y(a.n(), a.k());
    for (int i = 0; i < a.n(); ++i) {
        for (int l = 0; l < a.k(); ++l) y(i, l) = weight_a * a.y(i, l) + (1.0 - weight_a) * b.y(i, l);
    }
    return duals::DualSolution::from_acceptance(0.0, std::move(y));
}

// Master plan rows clipped so that no state accepts more than it reaches.
duals::DualSolution feasible_plan(const lp::LpSolution& sol, int n, int k) {
    Matrix y(n, k);
    std::vector<double> occupancy(static_cast<std::size_t>(k), 0.0);
    occupancy[static_cast<std::size_t>(k - 1)] = 1.0;
    for (int i = 0; i < n; ++i) {
        std::vector<double> following(occupancy.size(), 0.0);
        for (int l = 0; l < k; ++l) {
            const auto ul = static_cast<std::size_t>(l);
            const double raw = sol.primal[static_cast<std::size_t>(acceptance_col(i, l, k))];
            y(i, l) = std::clamp(raw, 0.0, occupancy[ul]);
            following[ul] += occupancy[ul] - y(i, l);
            if (l > 0) following[ul - 1] += y(i, l);
        }
        occupancy = std::move(following);
    }
    return duals::DualSolution::from_acceptance(0.0, std::move(y));
}

// The row y(i, l) <= x(i, l) of the acceptance master, with x expanded.
std::vector<lp::Term> reach_row(int i, int l, int k) {
    std::vector<lp::Term> row{{acceptance_col(i, l, k), 1.0}};
    for (int prev = 0; prev < i; ++prev) {
        row.push_back({acceptance_col(prev, l, k), 1.0});
        if (l + 1 < k) row.push_back({acceptance_col(prev, l + 1, k), -1.0});
    }
    return row;
}

IidGuarantee solve_dp_lp(int n, int k, double epsilon, Benchmark benchmark, const IidOptions& options,
                         const duals::DualSolution* hint) {
    const CoverageGrid grid = certification_grid(n, k, epsilon, benchmark);
    const double share = static_cast<double>(k) / n;
    auto applied = std::make_shared<std::vector<double>>();
    const std::size_t seeds[] = {0, grid_index(grid, share), grid.q.size() - 1};

    // Best feasible plan seen so far; its worst grid ratio is the certified value.
    duals::DualSolution center = rate_plan(n, k, share);
    double center_theta = min_ratio(center, grid);
    std::vector<std::size_t> seed_rows(std::begin(seeds), std::end(seeds));
    if (hint != nullptr) {
        duals::DualSolution warm = plan_from_rates(stretched_rates(*hint, n));
        const std::vector<double> r = coverage_ratios(warm, grid);
        const double warm_theta = std::min(1.0, *std::min_element(r.begin(), r.end()));
        for (std::size_t t : violated_minima(r, 2.0, 0.0)) {
            if (r[t] <= warm_theta + 0.01) seed_rows.push_back(t);
        }
        if (warm_theta > center_theta) {
            center = std::move(warm);
            center_theta = warm_theta;
        }
    }

    // Acceptance variables stay in a box around the center, widened whenever it binds at convergence.
    double box = kInitialBox;
    const auto box_bounds = [&] {
        std::vector<std::pair<double, double>> bounds;
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < k; ++l) {
                const double c = center.y(i, l);
                const double w = box * std::max(c, 1.0 / n);
                bounds.emplace_back(std::max(0.0, c - w), std::min(1.0, c + w));
            }
        }
        return bounds;
    };

    std::vector<double> box_lower, box_upper;
    const auto builder = [&] {
        lp::LinearProgram lp = acceptance_master(n, k);
        const auto bounds = box_bounds();
        box_lower.clear();
        box_upper.clear();
        for (std::size_t c = 0; c < bounds.size(); ++c) {
            box_lower.push_back(bounds[c].first);
            box_upper.push_back(bounds[c].second);
            lp.set_bounds(static_cast<int>(c) + 1, bounds[c].first, bounds[c].second);
        }
        for (std::size_t t : seed_rows) {
            const Cut cut = linear_cut(center, grid.q[t], grid.target[t]);
            lp.add_row(cut.terms, lp::RowSense::LessEqual, cut.rhs, "q=" + format_sig(grid.q[t], 12));
        }
        return lp;
    };

    const auto cut_separation = [&](const duals::DualSolution& at, std::size_t t, const lp::LpSolution& sol) {
        const double q = grid.q[t];
        Cut cut = linear_cut(at, q, grid.target[t]);
        const double violation = cut_violation(cut, sol);
        return lp::Separation{violation, "q=" + format_sig(q, 12),
                              [cut = std::move(cut), q, applied](lp::MasterProblem& m) {
                                  m.add_row(cut.terms, lp::RowSense::LessEqual, cut.rhs);
                                  applied->push_back(q);
                              }};
    };

    // Slack rows are purged, so reach rows come back when the master overdraws a state.
    const lp::ViolationOracle oracle = [&](const lp::LpSolution& sol) {
        std::vector<lp::Separation> out;
        const double master_theta = sol.primal[0];
        const duals::DualSolution plan = plan_from(sol, n, k, master_theta);
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < k; ++l) {
                const double over = plan.y(i, l) - plan.x(i, l);
                if (over > options.tol) {
                    out.push_back({over, "reach", [i, l, k](lp::MasterProblem& m) {
                                       m.add_row(reach_row(i, l, k), lp::RowSense::LessEqual, l == k - 1 ? 1.0 : 0.0, "reach");
                                   }});
                }
            }
        }
        duals::DualSolution feasible = feasible_plan(sol, n, k);
        const double feasible_theta = min_ratio(feasible, grid);
        bool recenter = false;
        if (feasible_theta > center_theta) {
            center = std::move(feasible);
            center_theta = feasible_theta;
            recenter = true;
        }
        if (out.empty() && master_theta - center_theta <= options.tol) {
            bool binding = false;
            for (int c = 1; c <= n * k && !binding; ++c) {
                const auto u = static_cast<std::size_t>(c);
                const double lo = box_lower[u - 1];
                const double hi = box_upper[u - 1];
                const double v = sol.primal[u];
                binding = std::abs(sol.reduced_cost[u]) > options.tol &&
                          ((lo > 0.0 && v <= lo + 1e-12) || (hi < 1.0 && v >= hi - 1e-12));
            }
            if (!binding) return out;
            box *= 2.0;
            recenter = true;
        }
        if (recenter) {
            auto bounds = box_bounds();
            for (std::size_t c = 0; c < bounds.size(); ++c) {
                box_lower[c] = bounds[c].first;
                box_upper[c] = bounds[c].second;
            }
            lp::Separation update{0.0, "box", [bounds = std::move(bounds)](lp::MasterProblem& m) {
                                      for (std::size_t c = 0; c < bounds.size(); ++c) {
                                          m.set_bounds(static_cast<int>(c) + 1, bounds[c].first, bounds[c].second);
                                      }
                                  }};
            update.mandatory = true;
            out.push_back(std::move(update));
        }
        if (master_theta - center_theta <= options.tol) {
            return out;
        }
        // Separate between the center and the master optimum first, which damps the oscillation
        // of plain cutting planes; fall back to cuts at the master optimum.
        const std::size_t reach_cuts = out.size();
        const duals::DualSolution mid = blend(center, plan, kCenterWeight);
        for (std::size_t t : violated_minima(coverage_ratios(mid, grid), master_theta, options.tol)) {
            lp::Separation s = cut_separation(mid, t, sol);
            if (s.violation > options.tol) out.push_back(std::move(s));
        }
        if (out.size() == reach_cuts) {
            for (std::size_t t : violated_minima(coverage_ratios(plan, grid), master_theta, options.tol)) {
                out.push_back(cut_separation(plan, t, sol));
            }
        }
        return out;
    };

    lp::GenerationOptions gen;
    gen.tol = options.tol;
    gen.max_rounds = options.max_rounds;
    gen.max_cuts_per_round = options.max_cuts_per_round;
    gen.purge_after = kPurgeAfterRounds;
    const lp::GenerationResult res = lp::solve_with_constraint_generation(builder, oracle, gen);
    if (!res.solution.optimal()) {
        throw NumericalFailure(std::string("IID coverage master ended ") + lp::to_string(res.solution.status));
    }

    IidGuarantee out;
    const double master = res.solution.primal[0];
    center.theta = center_theta;
    out.theta = center_theta;
    out.theta_high = std::max(master, center_theta);
    out.theta_low = (1.0 - epsilon) * center_theta;
    // Clipping the master plan's sub-tolerance overdraws costs at most tol per state.
    const double gap_tol = (10.0 + n * k) * options.tol;
    out.certified = res.certified && !res.iteration_limit && master - center_theta <= gap_tol;
    out.method = "coverage LP with cuts";
    out.grid_size = grid.q.size();
    out.rounds = res.rounds;
    out.active_q = *applied;
    out.certificate = std::move(center);
    out.stats = res.solution.stats;
    out.stats.iterations = res.total_iterations;
    return out;
}

// Exact coverage rows with auxiliaries, generated at the grid points the master plan violates.
IidGuarantee solve_dp_auxiliary(int n, int k, double epsilon, Benchmark benchmark, const IidOptions& options) {
    const CoverageGrid grid = certification_grid(n, k, epsilon, benchmark);
    const double share = static_cast<double>(k) / n;
    auto applied = std::make_shared<std::vector<double>>();
    const auto add = [&, applied](lp::MasterProblem& master, std::size_t t) {
        add_auxiliary_constraint(master, n, k, grid.q[t], grid.target[t]);
        applied->push_back(grid.q[t]);
    };
    const auto seed_index = static_cast<std::size_t>(std::distance(
        grid.q.begin(), std::lower_bound(grid.q.begin(), grid.q.end(), share, std::greater<>())));

    bool seeded = false;
    const lp::ViolationOracle oracle = [&](const lp::LpSolution& sol) {
        std::vector<lp::Separation> out;
        if (!seeded) {
            seeded = true;
            for (std::size_t t : {std::size_t{0}, seed_index, grid.q.size() - 1}) {
                out.push_back({1.0, "q=" + format_sig(grid.q[t], 12), [&, t](lp::MasterProblem& m) { add(m, t); }});
            }
            return out;
        }
        const double theta = sol.primal[0];
        const std::vector<double> r = coverage_ratios(plan_from(sol, n, k, theta), grid);
        for (std::size_t t : violated_minima(r, theta, options.tol)) {
            out.push_back(
                {theta - r[t], "q=" + format_sig(grid.q[t], 12), [&, t](lp::MasterProblem& m) { add(m, t); }});
        }
        return out;
    };

    lp::GenerationOptions gen;
    gen.tol = options.tol;
    gen.max_rounds = options.max_rounds;
    gen.max_cuts_per_round = 3;
    const lp::GenerationResult res =
        lp::solve_with_constraint_generation([&] { return acceptance_master(n, k); }, oracle, gen);
    if (!res.solution.optimal()) {
        throw NumericalFailure(std::string("IID coverage master ended ") + lp::to_string(res.solution.status));
    }

    const double master = res.solution.primal[0];
    duals::DualSolution plan = plan_from(res.solution, n, k, master);
    plan.theta = min_ratio(plan, grid);
    IidGuarantee out;
    out.theta = plan.theta;
    out.theta_high = std::max(master, plan.theta);
    out.theta_low = (1.0 - epsilon) * plan.theta;
    out.certified = res.certified && !res.iteration_limit;
    out.method = "coverage LP with auxiliaries";
    out.grid_size = grid.q.size();
    out.rounds = res.rounds;
    out.active_q = *applied;
    out.certificate = std::move(plan);
    out.stats = res.solution.stats;
    out.stats.iterations = res.total_iterations;
    return out;
}

IidGuarantee solve_st_mixture(int n, int k, double epsilon, Benchmark benchmark, const IidOptions& options) {
    const CoverageGrid grid = certification_grid(n, k, epsilon, benchmark);
    std::vector<double> taus;
    for (int t = 1; t <= options.tau_grid; ++t) taus.push_back(static_cast<double>(t) / options.tau_grid);
    taus.push_back(static_cast<double>(k) / n);
    std::sort(taus.begin(), taus.end());
    taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
    // Expected fill per unit rate; the coverage of rate tau at q is min{tau, q} times this.
    std::vector<double> slope(taus.size());
    for (std::size_t c = 0; c < taus.size(); ++c) slope[c] = numerics::binom_min_k_expect(n, taus[c], k) / taus[c];

    const auto coverage_row = [&](double q, double target) {
        std::vector<lp::Term> row{{0, target}};
        for (std::size_t c = 0; c < taus.size(); ++c) {
            row.push_back({static_cast<int>(c) + 1, -std::min(taus[c], q) * slope[c]});
        }
        return row;
    };

    const auto builder = [&] {
        lp::LinearProgram lp(lp::ObjectiveSense::Maximize);
        lp.add_variable(0.0, 1.0, 1.0, "theta");
        std::vector<lp::Term> mass;
        for (std::size_t c = 0; c < taus.size(); ++c) {
            mass.push_back({lp.add_variable(0.0, lp::kInfinity, 0.0), 1.0});
        }
        lp.add_row(mass, lp::RowSense::Equal, 1.0, "mass");
        // Limit q -> 0: Q(q)/q -> n and the coverage of rate tau over q -> its slope.
        std::vector<lp::Term> limit{{0, static_cast<double>(n)}};
        for (std::size_t c = 0; c < taus.size(); ++c) limit.push_back({static_cast<int>(c) + 1, -slope[c]});
        lp.add_row(limit, lp::RowSense::LessEqual, 0.0, "q=0+");
        lp.add_row(coverage_row(1.0, grid.target.front()), lp::RowSense::LessEqual, 0.0, "q=1");
        return lp;
    };

    const auto ratios = [&](const lp::LpSolution& sol) {
        std::vector<double> r(grid.q.size());
        for (std::size_t t = 0; t < grid.q.size(); ++t) {
            double cov = 0.0;
            for (std::size_t c = 0; c < taus.size(); ++c) {
                cov += sol.primal[c + 1] * std::min(taus[c], grid.q[t]) * slope[c];
            }
            r[t] = cov / grid.target[t];
        }
        return r;
    };

    const lp::ViolationOracle oracle = [&](const lp::LpSolution& sol) {
        std::vector<lp::Separation> out;
        const double theta = sol.primal[0];
        const std::vector<double> r = ratios(sol);
        for (std::size_t t : violated_minima(r, theta, options.tol)) {
            out.push_back({theta - r[t], "q=" + format_sig(grid.q[t], 12),
                           [row = coverage_row(grid.q[t], grid.target[t])](lp::MasterProblem& m) {
                               m.add_row(row, lp::RowSense::LessEqual, 0.0);
                           }});
        }
        return out;
    };

    lp::GenerationOptions gen;
    gen.tol = options.tol;
    gen.max_rounds = options.max_rounds;
    gen.max_cuts_per_round = options.max_cuts_per_round;
    const lp::GenerationResult res = lp::solve_with_constraint_generation(builder, oracle, gen);
    if (!res.solution.optimal()) {
        throw NumericalFailure(std::string("IID threshold mixture master ended ") +
                               lp::to_string(res.solution.status));
    }
    const double master = res.solution.primal[0];
    const std::vector<double> r = ratios(res.solution);
    double limit = 0.0;
    for (std::size_t c = 0; c < taus.size(); ++c) limit += res.solution.primal[c + 1] * slope[c];
    const double certified_theta = std::min({master, *std::min_element(r.begin(), r.end()), limit / n});

    IidGuarantee out;
    out.theta = certified_theta;
    out.theta_high = std::max(master, certified_theta);
    out.theta_low = (1.0 - epsilon) * certified_theta;
    out.certified = res.certified && !res.iteration_limit;
    out.method = "rate mixture LP";
    out.grid_size = grid.q.size();
    out.rounds = res.rounds;
    for (std::size_t c = 0; c < taus.size(); ++c) {
        const double w = res.solution.primal[c + 1];
        if (w > 1e-12) out.mixture.emplace_back(taus[c], w);
    }
    out.stats = res.solution.stats;
    out.stats.iterations = res.total_iterations;
    return out;
}

IidGuarantee exact(double theta, std::string method) {
    IidGuarantee out;
    out.theta = theta;
    out.theta_low = theta;
    out.theta_high = theta;
    out.certified = true;
    out.method = std::move(method);
    return out;
}

}  // namespace

Discretization build_discretization(int n, int k, double epsilon) {
    check_market(n, k);
    check_epsilon(epsilon);
    Discretization d{n, k, epsilon, {1.0}, {numerics::binom_min_k_expect(n, 1.0, k)}};
    const auto small_enough = [&](double q) {
        return numerics::pois_excess_expect(n * q, k) <= n * q * epsilon;
    };
    while (!small_enough(d.q.back())) {
        if (d.q.size() >= kMaxGridPoints) {
            throw SizeLimit("discretization exceeds " + std::to_string(kMaxGridPoints) + " points");
        }
        const double target = (1.0 - epsilon) * d.expected_fill.back();
        double lo = 0.0;
        double hi = d.q.back();
        // Keep hi on the side where the fill is at least the target.
        for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (numerics::binom_min_k_expect(n, mid, k) >= target) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        d.q.push_back(hi);
        d.expected_fill.push_back(numerics::binom_min_k_expect(n, hi, k));
    }
    return d;
}

double iid_target(int n, int k, double q, Benchmark benchmark) {
    if (benchmark == Benchmark::Proph) {
        return numerics::binom_min_k_expect(n, q, k);
    }
    return std::min(n * q, static_cast<double>(k));
}

double iid_static_value(int n, int k) {
    check_market(n, k);
    return numerics::binom_min_k_expect(n, static_cast<double>(k) / n, k) / k;
}

double rate_coverage(int n, int k, double tau, double q) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw DomainError("acceptance rate must lie in (0,1]");
    }
    return std::min(tau, q) * numerics::binom_min_k_expect(n, tau, k) / tau;
}

double tau_merge(double tau_low, double tau_high, int n, int k) {
    if (!(tau_low > 0.0 && tau_low <= tau_high && tau_high <= 1.0)) {
        throw DomainError("tau_merge needs 0 < tau_low <= tau_high <= 1");
    }
    // Matching the unfilled slots k - E[min{Bin, k}] instead of the fill keeps the target
    // resolvable when both endpoints nearly always fill every slot.
    const double goal = 0.5 * (unfilled_slots(n, tau_low, k) + unfilled_slots(n, tau_high, k));
    double lo = tau_low;
    double hi = 0.5 * (tau_low + tau_high);
    if (unfilled_slots(n, hi, k) >= goal) {
        return hi;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (unfilled_slots(n, mid, k) > goal) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return hi;
}

KertzPath kertz_recursion(int n, double tol) {
    if (n < 1) {
        throw DomainError("kertz_recursion needs n >= 1");
    }
    if (!(tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    if (n == 1) {
        return {1, 1.0, {1.0, 0.0}};
    }
    const double nd = n;
    const double power = nd / (nd - 1.0);
    // Final z_n, or -1 once the path turns negative (theta too small).
    const auto endpoint = [&](double theta, std::vector<double>* path) {
        double z = 1.0;
        if (path) path->assign(1, 1.0);
        for (int step = 0; step < n; ++step) {
            if (z < 0.0) return -1.0;
            z = (nd - 1.0) / nd * std::pow(z, power) - 1.0 / (nd * theta) + 1.0 / nd;
            if (path) path->push_back(z);
        }
        return z;
    };
    double lo = 0.5;
    double hi = 1.0;
    double theta = 0.75;
    for (int it = 0; it < 200; ++it) {
        theta = 0.5 * (lo + hi);
        const double z = endpoint(theta, nullptr);
        if (std::abs(z) <= tol || theta <= lo || theta >= hi) break;
        (z > 0.0 ? hi : lo) = theta;
    }
    KertzPath path{n, theta, {}};
    endpoint(theta, &path.z);
    return path;
}

std::vector<double> reverse_substitution(const KertzPath& path) {
    const int n = path.n;
    if (n == 1) {
        return {1.0};
    }
    const auto& z = path.z;
    std::vector<double> y(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (int i = 1; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        y[ui - 1] = n * path.theta * (z[ui + 1] - 2.0 * z[ui] + z[ui - 1]);
        sum += y[ui - 1];
    }
    y[static_cast<std::size_t>(n - 1)] = 1.0 - sum;
    return y;
}

double single_slot_violation(std::span<const double> y, int n, double theta, std::span<const double> q_grid) {
    double worst = -std::numeric_limits<double>::infinity();
    for (double q : q_grid) {
        double cover = 0.0;
        double used = 0.0;
        for (double yi : y) {
            cover += std::min(yi, q * (1.0 - used));
            used += yi;
        }
        worst = std::max(worst, (1.0 - std::pow(1.0 - q, n)) * theta - cover);
    }
    return worst;
}

double hill_kertz_constant(double tol) {
    if (!(tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    const auto excess = [&](double theta) {
        const double gap = 1.0 / theta - 1.0;
        const auto integrand = [gap](double h) {
            return 1.0 / (gap + (h > 0.0 ? h * (1.0 - std::log(h)) : 0.0));
        };
        return search1d::adaptive_simpson(integrand, 0.0, 1.0, tol / 10.0) - 1.0;
    };
    // The integral grows without bound as theta -> 1, so the upper end is never evaluated.
    double lo = 0.5;
    double hi = 1.0;
    double theta = 0.75;
    for (int it = 0; it < 200; ++it) {
        theta = 0.5 * (lo + hi);
        const double e = excess(theta);
        if (std::abs(e) <= tol || theta <= lo || theta >= hi) break;
        (e > 0.0 ? hi : lo) = theta;
    }
    return theta;
}

IidGuarantee iid_guarantee(int n, int k, double epsilon, PolicyClass policy, Benchmark benchmark,
                           const IidOptions& options) {
    check_market(n, k);
    check_epsilon(epsilon);
    // Against the ex-ante benchmark the fair-share rate is optimal for every policy class.
    if (policy == PolicyClass::OST || (options.method == Method::Auto && benchmark == Benchmark::ExAnte)) {
        const double tau = static_cast<double>(k) / n;
        IidGuarantee out = exact(iid_static_value(n, k), "fair-share rate closed form");
        out.tau = tau;
        duals::DualSolution plan = rate_plan(n, k, tau);
        plan.theta = out.theta;
        out.certificate = std::move(plan);
        return out;
    }
    if (policy == PolicyClass::ST) {
        return solve_st_mixture(n, k, epsilon, benchmark, options);
    }
    if (options.method == Method::Auto && k == 1 && benchmark == Benchmark::Proph) {
        const KertzPath path = kertz_recursion(n);
        IidGuarantee out = exact(path.theta, "single-slot recursion");
        Matrix y(n, 1);
        const std::vector<double> accept = reverse_substitution(path);
        for (int i = 0; i < n; ++i) y(i, 0) = std::max(0.0, accept[static_cast<std::size_t>(i)]);
        out.certificate = duals::DualSolution::from_acceptance(path.theta, std::move(y));
        return out;
    }
    if (options.formulation == Formulation::Cuts) {
        std::optional<IidGuarantee> coarse;
        if (n > 2 * kDirectAgents && n / 2 > k) {
            coarse = iid_guarantee(n / 2, k, epsilon, policy, benchmark, options);
        }
        return solve_dp_lp(n, k, epsilon, benchmark, options,
                           coarse && coarse->certificate ? &*coarse->certificate : nullptr);
    }
    return solve_dp_auxiliary(n, k, epsilon, benchmark, options);
}

std::optional<double> reference_guarantee(int k) {
    static constexpr double kValues[] = {0.7489, 0.8417, 0.8795, 0.9006, 0.9143,
                                         0.9247, 0.9332, 0.9393, 0.9434, 0.9464};
    if (k < 1 || k > 10) return std::nullopt;
    return kValues[k - 1];
}

std::vector<Table1Row> table1(int k_max, std::span<const int> n_values, double epsilon, int jobs) {
    if (k_max < 1) {
        throw DomainError("k_max must be at least 1");
    }
    std::vector<Table1Row> rows;
    for (int k = 1; k <= k_max; ++k) {
        for (int n : n_values) {
            if (n > k) rows.push_back({k, n, epsilon, 0.0, 0.0, reference_guarantee(k), false, 0.0});
        }
    }
    parallel_for(rows.size(), jobs, [&](std::size_t c) {
        Table1Row& row = rows[c];
        const auto start = std::chrono::steady_clock::now();
        const IidGuarantee g = iid_guarantee(row.n, row.k, epsilon, PolicyClass::DP, Benchmark::Proph);
        row.theta_low = g.theta_low;
        row.theta_high = g.theta_high;
        row.certified = g.certified;
        row.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    });
    return rows;
}

std::string table1_csv(std::span<const Table1Row> rows) {
    std::ostringstream out;
    out << "k,n,epsilon,theta_low,theta_high,reference_value,certified\n";
    for (const Table1Row& r : rows) {
        out << r.k << ',' << r.n << ',' << format_sig(r.epsilon) << ',' << format_sig(r.theta_low) << ','
            << format_sig(r.theta_high) << ',' << (r.reference ? format_sig(*r.reference) : "") << ','
            << (r.certified ? "certified" : "uncertified") << '\n';
    }
    return out.str();
}

std::string table1_svg(std::span<const Table1Row> rows) {
    constexpr double kWidth = 640;
    constexpr double kHeight = 400;
    constexpr double kMargin = 50;
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -x_lo;
    double y_lo = x_lo;
    double y_hi = -x_lo;
    for (const Table1Row& r : rows) {
        x_lo = std::min(x_lo, std::log2(r.n));
        x_hi = std::max(x_hi, std::log2(r.n));
        y_lo = std::min(y_lo, r.theta_high);
        y_hi = std::max(y_hi, r.theta_high);
    }
    if (rows.empty()) {
        x_lo = y_lo = 0.0;
        x_hi = y_hi = 1.0;
    }
    if (x_hi - x_lo < 1e-12) x_hi = x_lo + 1.0;
    if (y_hi - y_lo < 1e-12) y_hi = y_lo + 0.01;
    const auto px = [&](double x) { return kMargin + (x - x_lo) / (x_hi - x_lo) * (kWidth - 2 * kMargin); };
    const auto py = [&](double y) { return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * (kHeight - 2 * kMargin); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">log2 n</text>\n";
    out << "<text x=\"12\" y=\"" << kHeight / 2 << "\" transform=\"rotate(-90 12 " << kHeight / 2
        << ")\" text-anchor=\"middle\">theta</text>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kMargin - 8 << "\">" << format_sig(y_hi, 5) << "</text>\n";
    out << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 16 << "\">" << format_sig(y_lo, 5)
        << "</text>\n";
    static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    int series = 0;
    for (std::size_t start = 0; start < rows.size();) {
        std::size_t end = start;
        while (end < rows.size() && rows[end].k == rows[start].k) ++end;
        out << "<polyline fill=\"none\" stroke=\"" << kColors[series % 10] << "\" points=\"";
        for (std::size_t r = start; r < end; ++r) {
            out << (r > start ? " " : "") << format_sig(px(std::log2(rows[r].n)), 6) << ','
                << format_sig(py(rows[r].theta_high), 6);
        }
        out << "\"/>\n";
        out << "<text x=\"" << kWidth - kMargin + 4 << "\" y=\"" << format_sig(py(rows[end - 1].theta_high), 6)
            << "\" fill=\"" << kColors[series % 10] << "\">k=" << rows[start].k << "</text>\n";
        ++series;
        start = end;
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace prophetlab::iid

#include "prophetlab/duals.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <json.hpp>
#include <set>
#include <utility>

#include "prophetlab/errors.hpp"
#include "prophetlab/numerics.hpp"
#include "prophetlab/search1d.hpp"

namespace prophetlab::duals {

namespace {

std::string lower(std::string_view text) {
    std::string s(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

void check_slots(int k) {
    if (k < 1) {
        throw DomainError("k must be at least 1, got " + std::to_string(k));
    }
}

// One coverage requirement: theta * target <= sum_i sum_l min{y(i,l), weight[i] x(i,l)}.
struct CoverageRow {
    double target = 0.0;
    std::vector<double> weight;
};

// x(i,l) as an affine function of the acceptance variables.
struct StateExpression {
    double constant = 0.0;
    std::vector<lp::Term> terms;
};

class CoverageLp {
public:
    CoverageLp(int n, int k) : n_(n), k_(k) {
        lp_.set_sense(lp::ObjectiveSense::Maximize);
        theta_ = lp_.add_variable(0.0, lp::kInfinity, 1.0, "theta");
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < k; ++l) {
                lp_.add_variable(0.0, lp::kInfinity, 0.0, "y_" + std::to_string(i + 1) + "_" + std::to_string(l + 1));
            }
        }
        for (int i = 0; i < n; ++i) {
            for (int l = 0; l < k; ++l) {
                StateExpression x = state(i, l);
                x.terms.push_back({acceptance(i, l), 1.0});
                for (lp::Term& t : x.terms) {
                    if (t.col != acceptance(i, l)) t.value = -t.value;
                }
                lp_.add_row(x.terms, lp::RowSense::LessEqual, x.constant);
            }
        }
    }

    [[nodiscard]] int acceptance(int i, int l) const { return 1 + i * k_ + l; }

    [[nodiscard]] StateExpression state(int i, int l) const {
        StateExpression e;
        e.constant = l == k_ - 1 ? 1.0 : 0.0;
        for (int prev = 0; prev < i; ++prev) {
            e.terms.push_back({acceptance(prev, l), -1.0});
            if (l + 1 < k_) {
                e.terms.push_back({acceptance(prev, l + 1), 1.0});
            }
        }
        return e;
    }

    // y(i,l) = tau[i] x(i,l).
    void force_acceptance(std::span<const double> tau) {
        for (int i = 0; i < n_; ++i) {
            for (int l = 0; l < k_; ++l) {
                StateExpression x = state(i, l);
                std::vector<lp::Term> terms{{acceptance(i, l), 1.0}};
                for (const lp::Term& t : x.terms) terms.push_back({t.col, -tau[static_cast<std::size_t>(i)] * t.value});
                lp_.add_row(terms, lp::RowSense::Equal, tau[static_cast<std::size_t>(i)] * x.constant);
            }
        }
    }

    void add_coverage(const CoverageRow& row) {
        std::vector<lp::Term> terms{{theta_, row.target}};
        for (int i = 0; i < n_; ++i) {
            const double w = row.weight[static_cast<std::size_t>(i)];
            if (w <= 0.0) {
                continue;
            }
            for (int l = 0; l < k_; ++l) {
                if (w >= 1.0) {
                    terms.push_back({acceptance(i, l), -1.0});
                    continue;
                }
                const int t = lp_.add_variable(0.0, lp::kInfinity, 0.0);
                lp_.add_row({{t, 1.0}, {acceptance(i, l), -1.0}}, lp::RowSense::LessEqual, 0.0);
                StateExpression x = state(i, l);
                std::vector<lp::Term> cap{{t, 1.0}};
                for (const lp::Term& term : x.terms) cap.push_back({term.col, -w * term.value});
                lp_.add_row(cap, lp::RowSense::LessEqual, w * x.constant);
                terms.push_back({t, -1.0});
            }
        }
        lp_.add_row(terms, lp::RowSense::LessEqual, 0.0);
        ++coverage_rows_;
    }

    DualResult solve() const {
        if (coverage_rows_ == 0) {
            return {1.0, DualSolution::from_acceptance(1.0, Matrix(n_, k_)), {}};
        }
        const lp::LpSolution sol = lp::solve_lp(lp_);
        if (!sol.optimal()) {
            throw NumericalFailure(std::string("coverage LP ended ") + lp::to_string(sol.status));
        }
        Matrix y(n_, k_);
        for (int i = 0; i < n_; ++i) {
            for (int l = 0; l < k_; ++l) {
                y(i, l) = std::max(0.0, sol.primal[static_cast<std::size_t>(acceptance(i, l))]);
            }
        }
        const double theta = sol.primal[static_cast<std::size_t>(theta_)];
        return {theta, DualSolution::from_acceptance(theta, std::move(y)), sol.stats};
    }

private:
    int n_;
    int k_;
    int theta_ = 0;
    int coverage_rows_ = 0;
    lp::LinearProgram lp_;
};

CoverageLp type_coverage_lp(const TypeDistributions& g, int k, Benchmark benchmark) {
    check_slots(k);
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    CoverageLp lp(g.n(), k);
    for (int j : active_types(g, targets)) {
        lp.add_coverage({targets.q[static_cast<std::size_t>(j)], g.column(j)});
    }
    return lp;
}

// Per-type coverage of a threshold plan: sum_i min{tau_i, G_ij} avail_i.
std::vector<double> threshold_coverage(const TypeDistributions& g, int k, StaticThreshold rule,
                                       std::span<const int> types) {
    const std::vector<double> tau = model::acceptance_probabilities(g, rule);
    const std::vector<double> avail = numerics::prefix_availability(tau, k);
    std::vector<double> cov;
    cov.reserve(types.size());
    for (int j : types) {
        double c = 0.0;
        for (int i = 0; i < g.n(); ++i) {
            c += std::min(tau[static_cast<std::size_t>(i)], g(i, j)) * avail[static_cast<std::size_t>(i)];
        }
        cov.push_back(c);
    }
    return cov;
}

double ratio_floor(std::span<const double> coverage, std::span<const double> target) {
    double theta = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < coverage.size(); ++t) {
        theta = std::min(theta, coverage[t] / target[t]);
    }
    return std::isfinite(theta) ? theta : 1.0;
}

std::vector<double> targets_of(const CoverageTargets& targets, std::span<const int> types) {
    std::vector<double> q;
    q.reserve(types.size());
    for (int j : types) q.push_back(targets.q[static_cast<std::size_t>(j)]);
    return q;
}

nlohmann::json stats_json(const lp::SolveStats& s) {
    return {{"iterations", s.iterations},
            {"phase1_iterations", s.phase1_iterations},
            {"dual_iterations", s.dual_iterations},
            {"degenerate_pivots", s.degenerate_pivots},
            {"bland_pivots", s.bland_pivots},
            {"reinversions", s.reinversions},
            {"primal_residual", s.primal_residual},
            {"complementarity_residual", s.complementarity_residual},
            {"duality_gap", s.duality_gap}};
}

nlohmann::json rule_json(StaticThreshold rule) { return {{"type", rule.type}, {"rho", rule.rho}}; }

}  // namespace

const char* to_string(Benchmark b) { return b == Benchmark::Proph ? "proph" : "exante"; }

const char* to_string(PolicyClass p) {
    switch (p) {
        case PolicyClass::DP: return "dp";
        case PolicyClass::ST: return "st";
        case PolicyClass::OST: return "ost";
    }
    return "?";
}

Benchmark parse_benchmark(std::string_view text) {
    const std::string s = lower(text);
    if (s == "proph" || s == "prophet") return Benchmark::Proph;
    if (s == "exante" || s == "ex-ante") return Benchmark::ExAnte;
    throw ValidationError("unknown benchmark \"" + std::string(text) + "\" (expected proph or exante)");
}

PolicyClass parse_policy(std::string_view text) {
    const std::string s = lower(text);
    if (s == "dp") return PolicyClass::DP;
    if (s == "st") return PolicyClass::ST;
    if (s == "ost") return PolicyClass::OST;
    throw ValidationError("unknown policy \"" + std::string(text) + "\" (expected dp, st or ost)");
}

CoverageTargets coverage_targets(const TypeDistributions& g, int k, Benchmark benchmark) {
    check_slots(k);
    CoverageTargets t{std::vector<double>(static_cast<std::size_t>(g.m())), benchmark};
    double running = 0.0;
    for (int j = 0; j < g.m(); ++j) {
        const std::vector<double> col = g.column(j);
        double q = 0.0;
        if (benchmark == Benchmark::Proph) {
            q = numerics::poisbin_min_k_expect(numerics::ProbVector(col), k);
        } else {
            double mass = 0.0;
            for (double v : col) mass += v;
            q = std::min(mass, static_cast<double>(k));
        }
        running = std::max(running, q);
        t.q[static_cast<std::size_t>(j)] = running;
    }
    return t;
}

std::vector<int> active_types(const TypeDistributions& g, const CoverageTargets& targets) {
    std::vector<int> types;
    for (int j = 0; j < g.m(); ++j) {
        if (targets.q[static_cast<std::size_t>(j)] <= 0.0) {
            continue;
        }
        bool has_mass = false;
        for (int i = 0; i < g.n() && !has_mass; ++i) {
            has_mass = g.prob(i, j) > 0.0;
        }
        if (has_mass) types.push_back(j);
    }
    return types;
}

double DualSolution::polytope_residual() const {
    double r = std::abs(x(0, k() - 1) - 1.0);
    for (int l = 0; l + 1 < k(); ++l) r = std::max(r, std::abs(x(0, l)));
    for (int i = 0; i < n(); ++i) {
        for (int l = 0; l < k(); ++l) {
            r = std::max({r, -y(i, l), y(i, l) - x(i, l)});
            if (i > 0) {
                const double inflow = l + 1 < k() ? y(i - 1, l + 1) : 0.0;
                r = std::max(r, std::abs(x(i, l) - (x(i - 1, l) - y(i - 1, l) + inflow)));
            }
        }
    }
    return r;
}

double DualSolution::coverage(std::span<const double> weight) const {
    double c = 0.0;
    for (int i = 0; i < n(); ++i) {
        for (int l = 0; l < k(); ++l) {
            c += std::min(y(i, l), weight[static_cast<std::size_t>(i)] * x(i, l));
        }
    }
    return c;
}

DualSolution DualSolution::from_acceptance(double theta, Matrix y) {
    const int n = y.rows();
    const int k = y.cols();
    Matrix x(n, k);
    x(0, k - 1) = 1.0;
    for (int i = 1; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            x(i, l) = x(i - 1, l) - y(i - 1, l) + (l + 1 < k ? y(i - 1, l + 1) : 0.0);
        }
    }
    return {theta, std::move(x), std::move(y)};
}

double coverage_violation(const DualSolution& sol, const TypeDistributions& g, const CoverageTargets& targets) {
    double worst = 0.0;
    for (int j = 0; j < g.m(); ++j) {
        const double q = targets.q[static_cast<std::size_t>(j)];
        if (q > 0.0) {
            worst = std::max(worst, sol.theta * q - sol.coverage(g.column(j)));
        }
    }
    return worst;
}

DualResult inner_dual_dp(const TypeDistributions& g, int k, Benchmark benchmark) {
    return type_coverage_lp(g, k, benchmark).solve();
}

DualResult inner_dual_ost_lp(const TypeDistributions& g, int k, Benchmark benchmark, StaticThreshold rule) {
    CoverageLp lp = type_coverage_lp(g, k, benchmark);
    lp.force_acceptance(model::acceptance_probabilities(g, rule));
    return lp.solve();
}

PrimalInnerSolution primal_inner_dp(const TypeDistributions& g, int k, Benchmark benchmark) {
    check_slots(k);
    const int n = g.n();
    const int m = g.m();
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    const Matrix p = g.probabilities();

    lp::LinearProgram lp;
    lp.set_sense(lp::ObjectiveSense::Minimize);
    std::vector<int> gain(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        gain[static_cast<std::size_t>(j)] = lp.add_variable(0.0, lp::kInfinity, 0.0, "d_" + std::to_string(j + 1));
    }
    Matrix value_col(n, k);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) {
            const bool start = i == 0 && l == k - 1;
            value_col(i, l) = lp.add_variable(-lp::kInfinity, lp::kInfinity, start ? 1.0 : 0.0,
                                              "v_" + std::to_string(i + 1) + "_" + std::to_string(l + 1));
        }
    }
    const auto v = [&](int i, int l) { return static_cast<int>(value_col(i, l)); };

    // utility_col[l](i, j) < 0 marks a type agent i never draws.
    std::vector<Matrix> utility_col(static_cast<std::size_t>(k), Matrix(n, m, -1.0));
    for (int l = 0; l < k; ++l) {
        for (int i = 0; i < n; ++i) {
            std::vector<lp::Term> balance{{v(i, l), 1.0}};
            if (i + 1 < n) balance.push_back({v(i + 1, l), -1.0});
            for (int j = 0; j < m; ++j) {
                if (p(i, j) <= 0.0) continue;
                const int u = lp.add_variable(0.0, lp::kInfinity, 0.0);
                utility_col[static_cast<std::size_t>(l)](i, j) = u;
                balance.push_back({u, -p(i, j)});
                std::vector<lp::Term> gain_row{{u, 1.0}};
                for (int jj = j; jj < m; ++jj) gain_row.push_back({gain[static_cast<std::size_t>(jj)], -1.0});
                if (i + 1 < n) {
                    gain_row.push_back({v(i + 1, l), 1.0});
                    if (l > 0) gain_row.push_back({v(i + 1, l - 1), -1.0});
                }
                lp.add_row(gain_row, lp::RowSense::GreaterEqual, 0.0);
            }
            lp.add_row(balance, lp::RowSense::Equal, 0.0);
        }
    }
    std::vector<lp::Term> normalization;
    for (int j = 0; j < m; ++j) {
        if (targets.q[static_cast<std::size_t>(j)] > 0.0) {
            normalization.push_back({gain[static_cast<std::size_t>(j)], targets.q[static_cast<std::size_t>(j)]});
        }
    }
    lp.add_row(normalization, lp::RowSense::Equal, 1.0, "normalize");

    const lp::LpSolution sol = lp::solve_lp(lp);
    if (!sol.optimal()) {
        throw NumericalFailure(std::string("primal inner LP ended ") + lp::to_string(sol.status));
    }
    PrimalInnerSolution out;
    out.objective = sol.objective;
    out.stats = sol.stats;
    for (int j = 0; j < m; ++j) {
        out.gains.push_back(std::max(0.0, sol.primal[static_cast<std::size_t>(gain[static_cast<std::size_t>(j)])]));
    }
    out.value_to_go = Matrix(n, k);
    for (int i = 0; i < n; ++i) {
        for (int l = 0; l < k; ++l) out.value_to_go(i, l) = sol.primal[static_cast<std::size_t>(v(i, l))];
    }
    for (int l = 0; l < k; ++l) {
        Matrix u(n, m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) {
                const double col = utility_col[static_cast<std::size_t>(l)](i, j);
                u(i, j) = col < 0.0 ? 0.0 : sol.primal[static_cast<std::size_t>(col)];
            }
        }
        out.utility.push_back(std::move(u));
    }
    return out;
}

model::Instance instance_from_gains(const TypeDistributions& g, int k, std::span<const double> gains) {
    if (static_cast<int>(gains.size()) != g.m()) {
        throw ValidationError("need one valuation gain per type");
    }
    std::vector<double> values(gains.size());
    double suffix = 0.0;
    for (std::size_t j = gains.size(); j-- > 0;) {
        suffix += std::max(0.0, gains[j]);
        values[j] = suffix;
    }
    return {k, std::move(values), g.probabilities()};
}

DualSolution ost_certificate(const TypeDistributions& g, int k, StaticThreshold rule) {
    check_slots(k);
    const std::vector<double> tau = model::acceptance_probabilities(g, rule);
    Matrix x(g.n(), k);
    Matrix y(g.n(), k);
    std::vector<double> accepted(static_cast<std::size_t>(k), 0.0);
    accepted[0] = 1.0;
    for (int i = 0; i < g.n(); ++i) {
        const double t = tau[static_cast<std::size_t>(i)];
        for (int c = 0; c < k; ++c) {
            x(i, k - 1 - c) = accepted[static_cast<std::size_t>(c)];
            y(i, k - 1 - c) = t * accepted[static_cast<std::size_t>(c)];
        }
        for (int c = k - 1; c >= 0; --c) {
            const auto uc = static_cast<std::size_t>(c);
            accepted[uc] = accepted[uc] * (1.0 - t) + (c > 0 ? accepted[uc - 1] * t : 0.0);
        }
    }
    return {0.0, std::move(x), std::move(y)};
}

double ost_theta(const TypeDistributions& g, int k, StaticThreshold rule, Benchmark benchmark) {
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    const std::vector<int> types = active_types(g, targets);
    return ratio_floor(threshold_coverage(g, k, rule, types), targets_of(targets, types));
}

OstChoice ost_best(const TypeDistributions& g, int k, Benchmark benchmark) {
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    const std::vector<int> types = active_types(g, targets);
    const std::vector<double> q = targets_of(targets, types);
    OstChoice best{{g.m() - 1, 1.0}, -1.0};
    for (int type : types) {
        const auto theta = [&](double rho) {
            return ratio_floor(threshold_coverage(g, k, {type, rho}, types), q);
        };
        const search1d::Extremum e = search1d::grid_then_golden(theta, 0.0, 1.0, 1000, 1e-10);
        if (e.value > best.theta) {
            best = {{type, e.x}, e.value};
        }
    }
    if (best.theta < 0.0) {
        best.theta = 1.0;
    }
    return best;
}

MixtureResult st_mixture_theta(const TypeDistributions& g, int k, Benchmark benchmark, int rho_grid_size) {
    if (rho_grid_size < 2) {
        throw DomainError("rho grid needs at least 2 points");
    }
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    const std::vector<int> types = active_types(g, targets);
    const std::vector<double> q = targets_of(targets, types);
    if (types.empty()) {
        return {1.0, {{{g.m() - 1, 1.0}, 1.0}}, 1, {}};
    }

    std::vector<StaticThreshold> candidates;
    std::set<std::pair<int, double>> seen;
    const auto add = [&](StaticThreshold c) {
        if (c.rho > 0.0 && c.rho <= 1.0 && seen.emplace(c.type, c.rho).second) candidates.push_back(c);
    };
    const double h = 1.0 / rho_grid_size;
    for (int type : types) {
        for (int t = 1; t <= rho_grid_size; ++t) add({type, t == rho_grid_size ? 1.0 : t * h});
    }
    add(ost_best(g, k, benchmark).rule);

    MixtureResult result;
    for (int round = 0; round < 2; ++round) {
        lp::LinearProgram lp;
        lp.set_sense(lp::ObjectiveSense::Maximize);
        const int theta = lp.add_variable(0.0, lp::kInfinity, 1.0, "theta");
        std::vector<std::vector<lp::Term>> rows(types.size());
        std::vector<lp::Term> simplex;
        // Rows are scaled by their targets so rare top types keep their weight.
        for (std::size_t t = 0; t < types.size(); ++t) rows[t].push_back({theta, 1.0});
        for (const StaticThreshold& c : candidates) {
            const int mu = lp.add_variable(0.0, lp::kInfinity, 0.0);
            const std::vector<double> cov = threshold_coverage(g, k, c, types);
            for (std::size_t t = 0; t < types.size(); ++t) rows[t].push_back({mu, -cov[t] / q[t]});
            simplex.push_back({mu, 1.0});
        }
        for (const auto& row : rows) lp.add_row(row, lp::RowSense::LessEqual, 0.0);
        lp.add_row(simplex, lp::RowSense::Equal, 1.0, "mass");
        const lp::LpSolution sol = lp::solve_lp(lp);
        if (!sol.optimal()) {
            throw NumericalFailure(std::string("threshold mixture LP ended ") + lp::to_string(sol.status));
        }
        result.theta = sol.primal[static_cast<std::size_t>(theta)];
        result.stats = sol.stats;
        result.candidates = static_cast<int>(candidates.size());
        result.support.clear();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            const double w = sol.primal[c + 1];
            if (w > 1e-12) result.support.push_back({candidates[c], w});
        }
        if (round == 0) {
            for (const MixtureComponent& comp : result.support) {
                for (int t = -9; t <= 9; ++t) {
                    if (t != 0) add({comp.rule.type, comp.rule.rho + t * h / 10.0});
                }
            }
        }
    }
    return result;
}

DualResult ocrs_value(std::span<const double> marginals, int k) {
    check_slots(k);
    if (marginals.empty()) {
        throw DomainError("ocrs needs at least one agent");
    }
    double total = 0.0;
    for (double v : marginals) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("ex-ante marginals must lie in [0,1]");
        }
        total += v;
    }
    if (total > k + 1e-12) {
        throw DomainError("ex-ante marginals sum to more than k");
    }
    const int n = static_cast<int>(marginals.size());
    CoverageLp lp(n, k);
    for (int i = 0; i < n; ++i) {
        const double gi = marginals[static_cast<std::size_t>(i)];
        if (gi <= 0.0) continue;
        std::vector<double> weight(marginals.size(), 0.0);
        weight[static_cast<std::size_t>(i)] = gi;
        lp.add_coverage({gi, std::move(weight)});
    }
    return lp.solve();
}

OcrsSearchResult ocrs_worst_g(int n, int k, double step, long budget) {
    check_slots(k);
    if (n < 1) {
        throw DomainError("ocrs search needs n >= 1");
    }
    if (!(step > 0.0 && step <= 1.0)) {
        throw DomainError("grid step must lie in (0,1]");
    }
    const int levels = static_cast<int>(std::llround(1.0 / step));
    const auto value_at = [&](int level) { return std::min(1.0, level * step); };

    OcrsSearchResult best;
    best.marginals.assign(static_cast<std::size_t>(n), 0.0);
    const auto consider = [&](const std::vector<int>& levels_at) {
        std::vector<double> g(levels_at.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            g[i] = value_at(levels_at[i]);
            sum += g[i];
        }
        if (sum > k + 1e-9 || sum == 0.0) return std::numeric_limits<double>::infinity();
        if (sum > k) {
            const double scale = k / sum;
            for (double& v : g) v *= scale;
        }
        ++best.evaluations;
        const double theta = ocrs_value(g, k).theta;
        if (theta < best.theta) {
            best.theta = theta;
            best.marginals = g;
        }
        return theta;
    };

    const double grid_points = std::pow(static_cast<double>(levels + 1), n);
    std::vector<int> at(static_cast<std::size_t>(n), 0);
    if (grid_points <= static_cast<double>(budget)) {
        for (;;) {
            consider(at);
            int pos = 0;
            while (pos < n && ++at[static_cast<std::size_t>(pos)] > levels) {
                at[static_cast<std::size_t>(pos)] = 0;
                ++pos;
            }
            if (pos == n) break;
        }
        return best;
    }

    std::fill(at.begin(), at.end(), static_cast<int>(std::floor(std::min(1.0, static_cast<double>(k) / n) * levels)));
    double current = consider(at);
    for (bool improved = true; improved;) {
        improved = false;
        for (int i = 0; i < n; ++i) {
            const int keep = at[static_cast<std::size_t>(i)];
            int best_level = keep;
            for (int level = 0; level <= levels; ++level) {
                if (best.evaluations >= budget) {
                    best.exhausted = true;
                    at[static_cast<std::size_t>(i)] = best_level;
                    return best;
                }
                if (level == keep) continue;
                at[static_cast<std::size_t>(i)] = level;
                const double v = consider(at);
                if (v < current) {
                    current = v;
                    best_level = level;
                    improved = true;
                }
            }
            at[static_cast<std::size_t>(i)] = best_level;
        }
    }
    return best;
}

std::string to_json(const GuaranteeReport& report, int indent) {
    nlohmann::json doc;
    doc["policy"] = report.policy;
    doc["benchmark"] = report.benchmark;
    doc["theta"] = report.theta;
    if (report.theta_low) doc["theta_low"] = *report.theta_low;
    if (report.theta_high) doc["theta_high"] = *report.theta_high;
    doc["certified"] = report.certified;
    doc["method"] = report.method;
    if (report.rule) doc["threshold"] = rule_json(*report.rule);
    if (!report.mixture.empty()) {
        nlohmann::json mix = nlohmann::json::array();
        for (const MixtureComponent& c : report.mixture) {
            nlohmann::json entry = rule_json(c.rule);
            entry["weight"] = c.weight;
            mix.push_back(entry);
        }
        doc["mixture"] = mix;
    }
    if (report.certificate) {
        doc["certificate"] = {{"x", report.certificate->x.to_rows()}, {"y", report.certificate->y.to_rows()}};
    }
    doc["residuals"] = {{"polytope", report.polytope_residual}, {"coverage", report.coverage_residual}};
    doc["solver_stats"] = stats_json(report.stats);
    return doc.dump(indent);
}

GuaranteeReport guarantee_report(const TypeDistributions& g, int k, PolicyClass policy, Benchmark benchmark) {
    GuaranteeReport report;
    report.policy = to_string(policy);
    report.benchmark = to_string(benchmark);
    const CoverageTargets targets = coverage_targets(g, k, benchmark);
    switch (policy) {
        case PolicyClass::DP: {
            DualResult r = inner_dual_dp(g, k, benchmark);
            report.theta = r.theta;
            report.method = "type coverage LP";
            report.stats = r.stats;
            report.certificate = std::move(r.certificate);
            break;
        }
        case PolicyClass::OST: {
            const OstChoice best = ost_best(g, k, benchmark);
            report.theta = best.theta;
            report.method = "threshold closed form";
            report.rule = best.rule;
            DualSolution cert = ost_certificate(g, k, best.rule);
            cert.theta = best.theta;
            report.certificate = std::move(cert);
            break;
        }
        case PolicyClass::ST: {
            const MixtureResult mix = st_mixture_theta(g, k, benchmark);
            report.theta = mix.theta;
            report.method = "threshold mixture LP";
            report.mixture = mix.support;
            report.stats = mix.stats;
            break;
        }
    }
    if (report.certificate) {
        report.polytope_residual = report.certificate->polytope_residual();
        report.coverage_residual = coverage_violation(*report.certificate, g, targets);
    }
    return report;
}

}  // namespace prophetlab::duals

#include "prophetlab/noniid.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "prophetlab/errors.hpp"
#include "prophetlab/format.hpp"
#include "prophetlab/numerics.hpp"
#include "prophetlab/parallel.hpp"
#include "prophetlab/search1d.hpp"

namespace prophetlab::noniid {

namespace {

constexpr int kMaxSearchAgents = 6;
constexpr int kMaxSearchTypes = 4;
constexpr double kResidualTol = 1e-10;

// Grid levels of the free columns of G; the last column is fixed at 1.
struct LevelGrid {
    int n = 0;
    int types = 0;
    int scale = 1;  // levels per unit probability
    std::vector<int> level;

    int& at(int i, int j) { return level[static_cast<std::size_t>(i * (types - 1) + j)]; }
    [[nodiscard]] int at(int i, int j) const { return level[static_cast<std::size_t>(i * (types - 1) + j)]; }

    [[nodiscard]] TypeDistributions distributions() const {
        Matrix g(n, types);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j + 1 < types; ++j) g(i, j) = static_cast<double>(at(i, j)) / scale;
            g(i, types - 1) = 1.0;
        }
        return TypeDistributions(std::move(g));
    }
};

struct Descent {
    LevelGrid grid;
    double theta = 1.0;
    long evaluations = 0;
    bool exhausted = false;
};

// Coordinate descent: each pass moves every free entry to its best level within `reach` of the
// current one (anywhere in [0, 1] when reach is 0). Neighbours in the same row are clamped to keep
// the row monotone, so one move can shift a whole block of columns.
template <class Evaluate>
void descend(Descent& d, long budget, int reach, Evaluate&& evaluate) {
    const int free = d.grid.types - 1;
    const auto set = [&](int i, int j, int v) {
        for (int c = 0; c < free; ++c) {
            int& e = d.grid.at(i, c);
            if (c < j) e = std::min(e, v);
            if (c > j) e = std::max(e, v);
        }
        d.grid.at(i, j) = v;
    };
    for (bool improved = true; improved;) {
        improved = false;
        for (int i = 0; i < d.grid.n; ++i) {
            for (int j = 0; j < free; ++j) {
                const int current = d.grid.at(i, j);
                const int lo = reach > 0 ? std::max(0, current - reach) : 0;
                const int hi = reach > 0 ? std::min(d.grid.scale, current + reach) : d.grid.scale;
                const LevelGrid kept = d.grid;
                LevelGrid best = d.grid;
                for (int v = lo; v <= hi; ++v) {
                    if (v == current) continue;
                    if (d.evaluations >= budget) {
                        d.exhausted = true;
                        d.grid = best;
                        return;
                    }
                    d.grid = kept;
                    set(i, j, v);
                    const double theta = evaluate(d.grid);
                    ++d.evaluations;
                    if (theta < d.theta - 1e-12) {
                        d.theta = theta;
                        best = d.grid;
                        improved = true;
                    }
                }
                d.grid = best;
            }
        }
    }
}

}  // namespace

FixedPointResult bernopt_equal(int n, int k, double tol) {
    if (k < 1 || n <= k) {
        throw DomainError("bernopt_equal needs n > k >= 1");
    }
    if (!(tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    const auto avail = [&](double rho) { return numerics::binom_cdf_lt(n - 1, rho, k); };
    const auto share = [&](double rho) { return numerics::binom_min_k_expect(n - 1, rho, k) / k; };
    const double rho = search1d::bisect([&](double r) { return avail(r) - share(r); }, 0.0, 1.0, tol);
    const double a = avail(rho);
    const double s = share(rho);
    return {k, n, rho, 0.5 * (a + s), std::abs(a - s)};
}

FixedPointResult poisson_fixed_point(int k, double tol) {
    if (k < 1) {
        throw DomainError("poisson_fixed_point needs k >= 1");
    }
    if (!(tol > 0.0)) {
        throw DomainError("tolerance must be positive");
    }
    const auto avail = [&](double lambda) { return numerics::pois_cdf_lt(lambda, k); };
    const auto share = [&](double lambda) { return numerics::pois_min_k_expect(lambda, k) / k; };
    const double lambda =
        search1d::bisect([&](double l) { return avail(l) - share(l); }, 0.0, static_cast<double>(k), tol * k);
    const double a = avail(lambda);
    const double s = share(lambda);
    return {k, 0, lambda, 0.5 * (a + s), std::abs(a - s)};
}

std::vector<RateRow> rate_table(std::span<const int> k_values, int jobs) {
    for (int k : k_values) {
        if (k < 2) {
            throw DomainError("rate_table needs k >= 2, got " + std::to_string(k));
        }
    }
    std::vector<RateRow> rows(k_values.size());
    parallel_for(rows.size(), jobs, [&](std::size_t c) {
        const int k = k_values[c];
        const FixedPointResult fp = poisson_fixed_point(k);
        rows[c] = {k, fp.parameter, fp.alpha, (1.0 - fp.alpha) * std::sqrt(k / std::log(static_cast<double>(k)))};
    });
    return rows;
}

std::string rate_table_csv(std::span<const RateRow> rows) {
    std::ostringstream out;
    out << "k,lambda_k,alpha_k,scaled_gap,certified\n";
    for (const RateRow& r : rows) {
        const double residual =
            std::abs(numerics::pois_cdf_lt(r.lambda, r.k) - numerics::pois_min_k_expect(r.lambda, r.k) / r.k);
        out << r.k << ',' << format_sig(r.lambda) << ',' << format_sig(r.alpha) << ',' << format_sig(r.scaled_gap)
            << ',' << (residual <= kResidualTol ? "certified" : "uncertified") << '\n';
    }
    return out.str();
}

Band scaled_gap_band(std::span<const RateRow> rows) {
    if (rows.empty()) {
        throw DomainError("scaled_gap_band needs at least one row");
    }
    Band band{rows.front().scaled_gap, rows.front().scaled_gap};
    for (const RateRow& r : rows) {
        band.low = std::min(band.low, r.scaled_gap);
        band.high = std::max(band.high, r.scaled_gap);
    }
    return band;
}

TypeDistributions one_type_instance(int n, double eps) {
    if (n < 1) {
        throw DomainError("one_type_instance needs n >= 1");
    }
    if (!(eps > 0.0 && eps <= 1.0)) {
        throw DomainError("eps must lie in (0,1]");
    }
    Matrix g(n, 3);
    for (int i = 0; i + 1 < n; ++i) {
        g(i, 1) = 1.0;
        g(i, 2) = 1.0;
    }
    g(n - 1, 0) = eps;
    g(n - 1, 1) = eps;
    g(n - 1, 2) = 1.0;
    return TypeDistributions(std::move(g));
}

double dual_value(const TypeDistributions& g, int k, PolicyClass policy, Benchmark benchmark) {
    switch (policy) {
        case PolicyClass::DP:
            return duals::inner_dual_dp(g, k, benchmark).theta;
        case PolicyClass::ST:
            return duals::st_mixture_theta(g, k, benchmark).theta;
        case PolicyClass::OST:
            return duals::ost_best(g, k, benchmark).theta;
    }
    throw DomainError("unknown policy class");
}

SearchResult worst_case_search(int n, int k, PolicyClass policy, Benchmark benchmark, const SearchOptions& options) {
    if (n < 1 || n > kMaxSearchAgents) {
        throw DomainError("worst_case_search supports 1 <= n <= " + std::to_string(kMaxSearchAgents));
    }
    if (k < 1) {
        throw DomainError("worst_case_search needs k >= 1");
    }
    if (options.types < 2 || options.types > kMaxSearchTypes) {
        throw DomainError("worst_case_search supports 2 to " + std::to_string(kMaxSearchTypes) + " types");
    }
    const double levels = 1.0 / options.step;
    if (!(options.step > 0.0 && options.step <= 1.0) || std::abs(levels - std::round(levels)) > 1e-9) {
        throw DomainError("search step must divide 1");
    }
    if (options.restarts < 1 || options.refine_factor < 1 || options.budget < 1) {
        throw DomainError("restarts, refine factor and budget must be positive");
    }
    const int scale = static_cast<int>(std::lround(levels));
    const auto evaluate = [&](const LevelGrid& grid) {
        return dual_value(grid.distributions(), k, policy, benchmark);
    };

    LevelGrid start{n, options.types, scale,
                    std::vector<int>(static_cast<std::size_t>(n * (options.types - 1)), scale)};
    if (k >= n) {
        // Every policy keeps every agent.
        return {start.distributions(), evaluate(start), 1, false};
    }

    const long restart_budget = std::max(1L, options.budget * 4 / 5 / options.restarts);
    std::vector<Descent> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(runs.size(), options.jobs, [&](std::size_t r) {
        std::seed_seq seq{options.seed, static_cast<std::uint64_t>(r)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<int> pick(0, scale);
        Descent d{start};
        for (int i = 0; i < n; ++i) {
            std::vector<int> row(static_cast<std::size_t>(options.types - 1));
            for (int& v : row) v = pick(rng);
            std::sort(row.begin(), row.end());
            for (int j = 0; j + 1 < options.types; ++j) d.grid.at(i, j) = row[static_cast<std::size_t>(j)];
        }
        d.theta = evaluate(d.grid);
        d.evaluations = 1;
        descend(d, restart_budget, 0, evaluate);
        runs[r] = std::move(d);
    });

    long evaluations = 0;
    bool exhausted = false;
    std::size_t best = 0;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        evaluations += runs[r].evaluations;
        exhausted = exhausted || runs[r].exhausted;
        if (runs[r].theta < runs[best].theta) best = r;
    }

    Descent fine{runs[best].grid, runs[best].theta};
    fine.grid.scale = scale * options.refine_factor;
    for (int& v : fine.grid.level) v *= options.refine_factor;
    descend(fine, std::max(1L, options.budget - evaluations), options.refine_factor, evaluate);
    return {fine.grid.distributions(), fine.theta, evaluations + fine.evaluations, exhausted || fine.exhausted};
}

}  // namespace prophetlab::noniid

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <spdlog/spdlog.h>

#include "prophetlab/errors.hpp"
#include "prophetlab/lp.hpp"

namespace prophetlab::lp {

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free };

struct Entry {
    int row;
    double value;
};

std::pair<double, double> logical_bounds(RowSense sense, double rhs) {
    switch (sense) {
        case RowSense::LessEqual:
            return {-kInfinity, rhs};
        case RowSense::Equal:
            return {rhs, rhs};
        case RowSense::GreaterEqual:
            return {rhs, kInfinity};
    }
    return {rhs, rhs};
}

constexpr double kDegenerateStep = 1e-12;

}  // namespace

struct SimplexSolver::Impl {
    LinearProgram lp;
    SimplexOptions opt;
    double sign = 1.0;

    // Variables are the structural columns followed by one logical per row, in creation
    // order; the logical of row r carries column -e_r so that A x - s = 0.
    std::vector<std::vector<Entry>> column;
    std::vector<double> lo, hi, cost;
    std::vector<VarState> state;
    std::vector<double> x;
    std::vector<int> struct_var;
    std::vector<int> logical_var;
    std::vector<int> basis;
    std::vector<int> position;
    Eigen::MatrixXd binv;
    long pivots_since_refactor = 0;
    long consecutive_degenerate = 0;
    bool bland = false;
    SolveStats stats;

    Impl(LinearProgram program, SimplexOptions options) : lp(std::move(program)), opt(options) {
        lp.validate();
        sign = lp.sense() == ObjectiveSense::Maximize ? 1.0 : -1.0;
        for (int j = 0; j < lp.num_variables(); ++j) {
            const auto uj = static_cast<std::size_t>(j);
            struct_var.push_back(new_var(lp.lower()[uj], lp.upper()[uj], sign * lp.objective()[uj]));
        }
        for (int r = 0; r < lp.num_rows(); ++r) {
            for (const Term& t : lp.row(r)) {
                column[static_cast<std::size_t>(struct_var[static_cast<std::size_t>(t.col)])].push_back({r, t.value});
            }
        }
        const int m = lp.num_rows();
        for (int r = 0; r < m; ++r) {
            const auto [l, u] = logical_bounds(lp.row_senses()[static_cast<std::size_t>(r)],
                                               lp.rhs()[static_cast<std::size_t>(r)]);
            const int v = new_var(l, u, 0.0);
            column[static_cast<std::size_t>(v)].push_back({r, -1.0});
            logical_var.push_back(v);
            state[static_cast<std::size_t>(v)] = VarState::Basic;
            position[static_cast<std::size_t>(v)] = r;
            basis.push_back(v);
        }
        binv = -Eigen::MatrixXd::Identity(m, m);
    }

    int rows() const { return static_cast<int>(basis.size()); }
    int vars() const { return static_cast<int>(cost.size()); }

    int new_var(double l, double u, double c) {
        column.emplace_back();
        lo.push_back(l);
        hi.push_back(u);
        cost.push_back(c);
        position.push_back(-1);
        if (l > -kInfinity) {
            state.push_back(VarState::AtLower);
            x.push_back(l);
        } else if (u < kInfinity) {
            state.push_back(VarState::AtUpper);
            x.push_back(u);
        } else {
            state.push_back(VarState::Free);
            x.push_back(0.0);
        }
        return vars() - 1;
    }

    int add_variable(double l, double u, double c, std::string name) {
        const int col = lp.add_variable(l, u, c, std::move(name));
        lp.validate();
        struct_var.push_back(new_var(l, u, sign * c));
        return col;
    }

    int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name) {
        const int r = lp.add_row(terms, sense, rhs, std::move(name));
        for (const Term& t : terms) {
            if (t.col < 0 || t.col >= lp.num_variables() || !std::isfinite(t.value)) {
                throw ValidationError("added row references an invalid column or coefficient");
            }
        }
        if (!std::isfinite(rhs)) {
            throw ValidationError("added row has a non-finite right-hand side");
        }
        const int m = rows();
        Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
        for (const Term& t : terms) {
            const int v = struct_var[static_cast<std::size_t>(t.col)];
            column[static_cast<std::size_t>(v)].push_back({r, t.value});
            const int p = position[static_cast<std::size_t>(v)];
            if (p >= 0) {
                u[p] += t.value;
            }
        }
        const auto [l, h] = logical_bounds(sense, rhs);
        const int v = new_var(l, h, 0.0);
        column[static_cast<std::size_t>(v)].push_back({r, -1.0});
        logical_var.push_back(v);
        state[static_cast<std::size_t>(v)] = VarState::Basic;
        position[static_cast<std::size_t>(v)] = m;
        basis.push_back(v);

        const Eigen::RowVectorXd last = u.transpose() * binv;
        binv.conservativeResize(m + 1, m + 1);
        binv.col(m).setZero();
        binv.row(m).head(m) = last;
        binv(m, m) = -1.0;
        return r;
    }

    void set_bounds(int col, double l, double u) {
        lp.set_bounds(col, l, u);
        if (!(l <= u) || std::isnan(l) || std::isnan(u)) {
            throw ValidationError("variable bounds are inverted or NaN");
        }
        const auto v = static_cast<std::size_t>(struct_var.at(static_cast<std::size_t>(col)));
        lo[v] = l;
        hi[v] = u;
        if (state[v] == VarState::Basic) {
            return;
        }
        if (state[v] == VarState::AtUpper && u < kInfinity) {
            x[v] = u;
        } else if (l > -kInfinity) {
            state[v] = VarState::AtLower;
            x[v] = l;
        } else if (u < kInfinity) {
            state[v] = VarState::AtUpper;
            x[v] = u;
        } else {
            state[v] = VarState::Free;
            x[v] = 0.0;
        }
    }

    std::vector<int> remove_slack_rows(std::span<const int> candidates) {
        std::vector<int> drop;
        for (int r : candidates) {
            if (r >= 0 && r < rows() && state[static_cast<std::size_t>(logical_var[static_cast<std::size_t>(r)])] == VarState::Basic) {
                drop.push_back(r);
            }
        }
        std::ranges::sort(drop);
        drop.erase(std::unique(drop.begin(), drop.end()), drop.end());
        const std::vector<int> map = lp.remove_rows(drop);
        if (drop.empty()) {
            return map;
        }
        const int m = rows();
        // Removing a basic logical and its row leaves B^{-1} with that basis position and row struck out.
        std::vector<bool> drop_pos(static_cast<std::size_t>(m), false);
        for (int r : drop) {
            drop_pos[static_cast<std::size_t>(position[static_cast<std::size_t>(logical_var[static_cast<std::size_t>(r)])])] = true;
        }
        std::vector<int> keep_pos, keep_row;
        for (int i = 0; i < m; ++i) {
            if (!drop_pos[static_cast<std::size_t>(i)]) {
                keep_pos.push_back(i);
            }
            if (map[static_cast<std::size_t>(i)] >= 0) {
                keep_row.push_back(i);
            }
        }
        const int m2 = static_cast<int>(keep_pos.size());
        Eigen::MatrixXd reduced(m2, m2);
        for (int b = 0; b < m2; ++b) {
            for (int a = 0; a < m2; ++a) {
                reduced(a, b) = binv(keep_pos[static_cast<std::size_t>(a)], keep_row[static_cast<std::size_t>(b)]);
            }
        }
        binv = std::move(reduced);

        for (int r : drop) {
            const auto v = static_cast<std::size_t>(logical_var[static_cast<std::size_t>(r)]);
            column[v].clear();
            lo[v] = hi[v] = x[v] = 0.0;
            state[v] = VarState::AtLower;
            position[v] = -1;
        }
        std::vector<int> new_basis;
        new_basis.reserve(static_cast<std::size_t>(m2));
        for (int i : keep_pos) {
            const int v = basis[static_cast<std::size_t>(i)];
            position[static_cast<std::size_t>(v)] = static_cast<int>(new_basis.size());
            new_basis.push_back(v);
        }
        basis = std::move(new_basis);
        std::vector<int> new_logical;
        for (int r = 0; r < m; ++r) {
            if (map[static_cast<std::size_t>(r)] >= 0) {
                new_logical.push_back(logical_var[static_cast<std::size_t>(r)]);
            }
        }
        logical_var = std::move(new_logical);
        for (auto& col : column) {
            std::erase_if(col, [&](const Entry& e) { return map[static_cast<std::size_t>(e.row)] < 0; });
            for (Entry& e : col) {
                e.row = map[static_cast<std::size_t>(e.row)];
            }
        }
        return map;
    }

    // ---- linear algebra -------------------------------------------------

    void refactor() {
        const int m = rows();
        ++stats.reinversions;
        pivots_since_refactor = 0;
        if (m == 0) {
            binv.resize(0, 0);
            return;
        }
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
            for (const Entry& e : column[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])]) {
                b(e.row, i) += e.value;
            }
        }
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
        const Eigen::VectorXd diag = lu.matrixLU().diagonal().cwiseAbs();
        if (diag.minCoeff() <= 1e-13 * std::max(1.0, diag.maxCoeff())) {
            throw NumericalFailure("simplex basis became singular during reinversion");
        }
        binv = lu.inverse();
    }

    Eigen::VectorXd ftran(int var) const {
        Eigen::VectorXd alpha = Eigen::VectorXd::Zero(rows());
        for (const Entry& e : column[static_cast<std::size_t>(var)]) {
            alpha.noalias() += e.value * binv.col(e.row);
        }
        return alpha;
    }

    void recompute_basics() {
        const int m = rows();
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
        for (int j = 0; j < vars(); ++j) {
            if (state[static_cast<std::size_t>(j)] == VarState::Basic) {
                continue;
            }
            const double v = x[static_cast<std::size_t>(j)];
            if (v == 0.0) {
                continue;
            }
            for (const Entry& e : column[static_cast<std::size_t>(j)]) {
                rhs[e.row] -= e.value * v;
            }
        }
        const Eigen::VectorXd xb = binv * rhs;
        for (int i = 0; i < m; ++i) {
            x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = xb[i];
        }
    }

    // Largest |A x - s| over rows, from the stored columns.
    double balance_residual() const {
        std::vector<double> r(static_cast<std::size_t>(rows()), 0.0);
        for (int j = 0; j < vars(); ++j) {
            const double v = x[static_cast<std::size_t>(j)];
            for (const Entry& e : column[static_cast<std::size_t>(j)]) {
                r[static_cast<std::size_t>(e.row)] += e.value * v;
            }
        }
        double worst = 0.0;
        for (double ri : r) {
            worst = std::max(worst, std::abs(ri));
        }
        return worst;
    }

    double infeasibility(int var) const {
        const auto u = static_cast<std::size_t>(var);
        return std::max({0.0, lo[u] - x[u], x[u] - hi[u]});
    }

    bool primal_feasible() const {
        for (int v : basis) {
            if (infeasibility(v) > opt.feasibility_tol) {
                return false;
            }
        }
        return true;
    }

    Eigen::VectorXd prices(bool phase1) const {
        const int m = rows();
        Eigen::VectorXd cb(m);
        for (int i = 0; i < m; ++i) {
            const auto v = static_cast<std::size_t>(basis[static_cast<std::size_t>(i)]);
            if (phase1) {
                cb[i] = x[v] < lo[v] - opt.feasibility_tol ? 1.0 : (x[v] > hi[v] + opt.feasibility_tol ? -1.0 : 0.0);
            } else {
                cb[i] = cost[v];
            }
        }
        return binv.transpose() * cb;
    }

    double reduced_cost(int var, const Eigen::VectorXd& pi, bool phase1) const {
        double d = phase1 ? 0.0 : cost[static_cast<std::size_t>(var)];
        for (const Entry& e : column[static_cast<std::size_t>(var)]) {
            d -= pi[e.row] * e.value;
        }
        return d;
    }

    // Worst sign violation of the reduced costs of nonbasic variables.
    double dual_infeasibility(const Eigen::VectorXd& pi) const {
        double worst = 0.0;
        for (int j = 0; j < vars(); ++j) {
            const auto u = static_cast<std::size_t>(j);
            if (state[u] == VarState::Basic || lo[u] == hi[u]) {
                continue;
            }
            const double d = reduced_cost(j, pi, false);
            switch (state[u]) {
                case VarState::AtLower:
                    worst = std::max(worst, d);
                    break;
                case VarState::AtUpper:
                    worst = std::max(worst, -d);
                    break;
                case VarState::Free:
                    worst = std::max(worst, std::abs(d));
                    break;
                case VarState::Basic:
                    break;
            }
        }
        return worst;
    }

    void pivot(int r, int entering, const Eigen::VectorXd& alpha) {
        const double piv = alpha[r];
        const Eigen::RowVectorXd pr = binv.row(r) / piv;
        binv.noalias() -= alpha * pr;
        binv.row(r) = pr;
        const int leaving = basis[static_cast<std::size_t>(r)];
        position[static_cast<std::size_t>(leaving)] = -1;
        basis[static_cast<std::size_t>(r)] = entering;
        position[static_cast<std::size_t>(entering)] = r;
        state[static_cast<std::size_t>(entering)] = VarState::Basic;
        if (++pivots_since_refactor >= std::max(100, rows())) {
            refactor();
            recompute_basics();
        }
    }

    void count_iteration(double step) {
        ++stats.iterations;
        if (stats.iterations > opt.max_iterations) {
            throw NumericalFailure("simplex iteration limit exceeded");
        }
        if (bland) {
            ++stats.bland_pivots;
        }
        if (step <= kDegenerateStep) {
            ++stats.degenerate_pivots;
            if (++consecutive_degenerate >= opt.bland_after_degenerate) {
                bland = true;
            }
        } else {
            consecutive_degenerate = 0;
            bland = false;
        }
    }

    // ---- primal simplex -------------------------------------------------

    Status primal_phase(bool phase1) {
        const double ftol = opt.feasibility_tol;
        for (;;) {
            if (phase1 && primal_feasible()) {
                return Status::Optimal;
            }
            const Eigen::VectorXd pi = prices(phase1);

            int entering = -1;
            int dir = 0;
            double best_score = 0.0;
            for (int j = 0; j < vars(); ++j) {
                const auto u = static_cast<std::size_t>(j);
                if (state[u] == VarState::Basic || lo[u] == hi[u]) {
                    continue;
                }
                const double d = reduced_cost(j, pi, phase1);
                int jdir = 0;
                if ((state[u] == VarState::AtLower || state[u] == VarState::Free) && d > opt.optimality_tol) {
                    jdir = 1;
                } else if ((state[u] == VarState::AtUpper || state[u] == VarState::Free) && d < -opt.optimality_tol) {
                    jdir = -1;
                }
                if (jdir == 0) {
                    continue;
                }
                if (bland) {
                    entering = j;
                    dir = jdir;
                    break;
                }
                if (std::abs(d) > best_score) {
                    best_score = std::abs(d);
                    entering = j;
                    dir = jdir;
                }
            }
            if (entering < 0) {
                return phase1 ? Status::Infeasible : Status::Optimal;
            }

            const Eigen::VectorXd alpha = ftran(entering);
            const auto ue = static_cast<std::size_t>(entering);
            const double flip = (lo[ue] > -kInfinity && hi[ue] < kInfinity) ? hi[ue] - lo[ue] : kInfinity;

            // Harris pass 1: largest step keeping basics within tolerance-relaxed bounds.
            double t_max = flip;
            const int m = rows();
            for (int i = 0; i < m; ++i) {
                const double a = alpha[i];
                if (std::abs(a) < opt.pivot_tol) {
                    continue;
                }
                const double rate = -dir * a;
                const auto v = static_cast<std::size_t>(basis[static_cast<std::size_t>(i)]);
                const double xv = x[v];
                double t;
                if (phase1 && xv < lo[v] - ftol) {
                    if (rate <= 0) continue;
                    t = (lo[v] - xv) / rate;
                } else if (phase1 && xv > hi[v] + ftol) {
                    if (rate >= 0) continue;
                    t = (xv - hi[v]) / -rate;
                } else if (rate < 0 && lo[v] > -kInfinity) {
                    t = (xv - lo[v] + ftol) / -rate;
                } else if (rate > 0 && hi[v] < kInfinity) {
                    t = (hi[v] + ftol - xv) / rate;
                } else {
                    continue;
                }
                t_max = std::min(t_max, t);
            }
            if (t_max == kInfinity) {
                if (phase1) {
                    throw NumericalFailure("phase I direction unbounded");
                }
                return Status::Unbounded;
            }

            // Pass 2: among blocking rows within t_max, keep the largest pivot.
            int leave = -1;
            double leave_step = 0.0;
            double leave_target = 0.0;
            double best_pivot = 0.0;
            if (flip > t_max) {
                for (int i = 0; i < m; ++i) {
                    const double a = alpha[i];
                    if (std::abs(a) < opt.pivot_tol) {
                        continue;
                    }
                    const double rate = -dir * a;
                    const auto v = static_cast<std::size_t>(basis[static_cast<std::size_t>(i)]);
                    const double xv = x[v];
                    double t;
                    double target;
                    if (phase1 && xv < lo[v] - ftol) {
                        if (rate <= 0) continue;
                        t = (lo[v] - xv) / rate;
                        target = lo[v];
                    } else if (phase1 && xv > hi[v] + ftol) {
                        if (rate >= 0) continue;
                        t = (xv - hi[v]) / -rate;
                        target = hi[v];
                    } else if (rate < 0 && lo[v] > -kInfinity) {
                        t = (xv - lo[v]) / -rate;
                        target = lo[v];
                    } else if (rate > 0 && hi[v] < kInfinity) {
                        t = (hi[v] - xv) / rate;
                        target = hi[v];
                    } else {
                        continue;
                    }
                    if (t > t_max) {
                        continue;
                    }
                    const bool better = bland ? (leave < 0 || basis[static_cast<std::size_t>(i)] <
                                                                  basis[static_cast<std::size_t>(leave)])
                                              : std::abs(a) > best_pivot;
                    if (better) {
                        leave = i;
                        leave_step = std::max(0.0, t);
                        leave_target = target;
                        best_pivot = std::abs(a);
                    }
                }
                if (leave < 0) {
                    throw NumericalFailure("ratio test found no blocking row");
                }
            }

            const double step = leave < 0 ? flip : leave_step;
            for (int i = 0; i < m; ++i) {
                x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] -= dir * alpha[i] * step;
            }
            x[ue] += dir * step;
            count_iteration(step);
            if (phase1) {
                ++stats.phase1_iterations;
            }
            if (leave < 0) {
                state[ue] = state[ue] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
                x[ue] = state[ue] == VarState::AtLower ? lo[ue] : hi[ue];
                continue;
            }
            const int leaving = basis[static_cast<std::size_t>(leave)];
            const auto ul = static_cast<std::size_t>(leaving);
            x[ul] = leave_target;
            state[ul] = leave_target == lo[ul] ? VarState::AtLower : VarState::AtUpper;
            pivot(leave, entering, alpha);
        }
    }

    // Shifts each nonbasic cost further into its dual-feasible side by a small deterministic
    // amount, which breaks the ties of the dual ratio test on degenerate masters. The caller
    // restores the returned costs and finishes with the primal simplex.
    std::vector<double> perturb_costs() {
        std::vector<double> saved = cost;
        std::uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (int j = 0; j < vars(); ++j) {
            const auto u = static_cast<std::size_t>(j);
            h ^= h >> 12;
            h ^= h << 25;
            h ^= h >> 27;
            if (state[u] == VarState::Basic || state[u] == VarState::Free || lo[u] == hi[u]) {
                continue;
            }
            const double unit = static_cast<double>((h * 0x2545f4914f6cdd1dULL) >> 11) * 0x1.0p-53;
            const double shift = opt.cost_perturbation * (1.0 + std::abs(cost[u])) * (0.5 + unit);
            cost[u] += state[u] == VarState::AtLower ? -shift : shift;
        }
        return saved;
    }

    // ---- dual simplex ---------------------------------------------------

    Status dual_phase() {
        const int m = rows();
        for (;;) {
            int r = -1;
            double worst = opt.feasibility_tol;
            for (int i = 0; i < m; ++i) {
                const double inf = infeasibility(basis[static_cast<std::size_t>(i)]);
                if (inf > worst) {
                    worst = inf;
                    r = i;
                }
            }
            if (r < 0) {
                return Status::Optimal;
            }
            const auto vr = static_cast<std::size_t>(basis[static_cast<std::size_t>(r)]);
            const bool below = x[vr] < lo[vr];
            const double target = below ? lo[vr] : hi[vr];

            const Eigen::VectorXd pi = prices(false);
            const Eigen::VectorXd rho = binv.row(r).transpose();

            struct Candidate {
                int var;
                double ratio;
                double alpha_r;
            };
            std::vector<Candidate> cands;
            double t_max = kInfinity;
            for (int j = 0; j < vars(); ++j) {
                const auto u = static_cast<std::size_t>(j);
                if (state[u] == VarState::Basic || lo[u] == hi[u]) {
                    continue;
                }
                double a = 0.0;
                for (const Entry& e : column[u]) {
                    a += rho[e.row] * e.value;
                }
                if (std::abs(a) < opt.pivot_tol) {
                    continue;
                }
                // x_r moves by -a per unit of x_j; it must move toward its violated bound.
                const bool up_ok = state[u] == VarState::AtLower || state[u] == VarState::Free;
                const bool down_ok = state[u] == VarState::AtUpper || state[u] == VarState::Free;
                const bool eligible = below ? ((up_ok && a < 0) || (down_ok && a > 0))
                                            : ((up_ok && a > 0) || (down_ok && a < 0));
                if (!eligible) {
                    continue;
                }
                const double d = reduced_cost(j, pi, false);
                double slack;
                if (state[u] == VarState::AtLower) {
                    slack = std::max(0.0, -d);
                } else if (state[u] == VarState::AtUpper) {
                    slack = std::max(0.0, d);
                } else {
                    slack = std::abs(d);
                }
                cands.push_back({j, slack / std::abs(a), a});
                t_max = std::min(t_max, (slack + opt.optimality_tol) / std::abs(a));
            }
            if (cands.empty()) {
                return Status::Infeasible;
            }
            int entering = -1;
            double best_pivot = 0.0;
            for (const Candidate& c : cands) {
                if (c.ratio > t_max) {
                    continue;
                }
                const bool better = bland ? (entering < 0 || c.var < entering) : std::abs(c.alpha_r) > best_pivot;
                if (better) {
                    entering = c.var;
                    best_pivot = std::abs(c.alpha_r);
                }
            }
            const Eigen::VectorXd alpha = ftran(entering);
            if (std::abs(alpha[r]) < opt.pivot_tol) {
                throw NumericalFailure("dual simplex pivot below tolerance");
            }
            const double delta = (x[vr] - target) / alpha[r];
            for (int i = 0; i < m; ++i) {
                x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] -= alpha[i] * delta;
            }
            x[static_cast<std::size_t>(entering)] += delta;
            x[vr] = target;
            state[vr] = below ? VarState::AtLower : VarState::AtUpper;
            ++stats.dual_iterations;
            count_iteration(std::abs(delta) + 1.0);
            pivot(r, entering, alpha);
        }
    }

    // ---- driver ---------------------------------------------------------

    LpSolution solve() {
        bool verified = false;
        Status status = Status::Optimal;
        for (int attempt = 0; attempt < 4 && !verified; ++attempt) {
            if (attempt > 0) {
                refactor();
            }
            recompute_basics();
            if (!primal_feasible()) {
                if (dual_infeasibility(prices(false)) <= opt.optimality_tol) {
                    const std::vector<double> saved = perturb_costs();
                    status = dual_phase();
                    cost = saved;
                    if (status == Status::Infeasible) {
                        return finish(status);
                    }
                }
                if (!primal_feasible()) {
                    status = primal_phase(true);
                    if (status == Status::Infeasible) {
                        return finish(status);
                    }
                }
            }
            status = primal_phase(false);
            if (status == Status::Unbounded) {
                return finish(status);
            }
            verified = balance_residual() <= opt.feasibility_tol && primal_feasible() &&
                       dual_infeasibility(prices(false)) <= opt.optimality_tol;
            if (!verified) {
                spdlog::debug("simplex: residual check failed, reinverting (attempt {})", attempt + 1);
            }
        }
        if (!verified) {
            throw NumericalFailure("simplex could not reach a verified optimum within tolerance");
        }
        return finish(Status::Optimal);
    }

    LpSolution finish(Status status) {
        LpSolution sol;
        sol.status = status;
        const int n = lp.num_variables();
        const int m = rows();
        sol.primal.resize(static_cast<std::size_t>(n));
        for (int c = 0; c < n; ++c) {
            sol.primal[static_cast<std::size_t>(c)] = x[static_cast<std::size_t>(struct_var[static_cast<std::size_t>(c)])];
        }
        sol.objective = lp.objective_value(sol.primal);
        if (status != Status::Optimal) {
            sol.stats = stats;
            return sol;
        }
        const Eigen::VectorXd pi = prices(false);
        sol.dual.resize(static_cast<std::size_t>(m));
        for (int r = 0; r < m; ++r) {
            sol.dual[static_cast<std::size_t>(r)] = sign * pi[r];
        }
        sol.reduced_cost.resize(static_cast<std::size_t>(n));
        double dual_obj = 0.0;
        double comp = 0.0;
        for (int c = 0; c < n; ++c) {
            const int v = struct_var[static_cast<std::size_t>(c)];
            const auto uv = static_cast<std::size_t>(v);
            const double d = state[uv] == VarState::Basic ? 0.0 : reduced_cost(v, pi, false);
            sol.reduced_cost[static_cast<std::size_t>(c)] = sign * d;
            if (d != 0.0) {
                dual_obj += d * x[uv];
            }
            double dist = 1.0;
            if (lo[uv] > -kInfinity || hi[uv] < kInfinity) {
                dist = std::min(lo[uv] > -kInfinity ? std::abs(x[uv] - lo[uv]) : kInfinity,
                                hi[uv] < kInfinity ? std::abs(x[uv] - hi[uv]) : kInfinity);
            }
            comp = std::max(comp, std::abs(d) * dist);
        }
        const std::vector<double> act = lp.activities(sol.primal);
        double primal_res = 0.0;
        for (int r = 0; r < m; ++r) {
            const auto ur = static_cast<std::size_t>(r);
            const double b = lp.rhs()[ur];
            const double gap = act[ur] - b;
            double viol = 0.0;
            switch (lp.row_senses()[ur]) {
                case RowSense::LessEqual:
                    viol = std::max(0.0, gap);
                    break;
                case RowSense::GreaterEqual:
                    viol = std::max(0.0, -gap);
                    break;
                case RowSense::Equal:
                    viol = std::abs(gap);
                    break;
            }
            primal_res = std::max(primal_res, viol);
            dual_obj += pi[r] * b;
            if (lp.row_senses()[ur] != RowSense::Equal) {
                comp = std::max(comp, std::abs(pi[r]) * std::abs(gap));
            }
        }
        for (int c = 0; c < n; ++c) {
            const auto uc = static_cast<std::size_t>(c);
            primal_res = std::max({primal_res, lp.lower()[uc] - sol.primal[uc], sol.primal[uc] - lp.upper()[uc]});
        }
        stats.primal_residual = primal_res;
        stats.complementarity_residual = comp;
        stats.duality_gap = std::abs(sign * sol.objective - dual_obj);
        sol.stats = stats;
        return sol;
    }
};

SimplexSolver::SimplexSolver(LinearProgram lp, SimplexOptions options)
    : impl_(std::make_unique<Impl>(std::move(lp), options)) {}
SimplexSolver::~SimplexSolver() = default;
SimplexSolver::SimplexSolver(SimplexSolver&&) noexcept = default;
SimplexSolver& SimplexSolver::operator=(SimplexSolver&&) noexcept = default;

LpSolution SimplexSolver::solve() {
    return impl_->solve();
}

int SimplexSolver::add_variable(double lower, double upper, double objective, std::string name) {
    return impl_->add_variable(lower, upper, objective, std::move(name));
}

int SimplexSolver::add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name) {
    return impl_->add_row(terms, sense, rhs, std::move(name));
}

void SimplexSolver::set_bounds(int col, double lower, double upper) {
    impl_->set_bounds(col, lower, upper);
}

std::vector<int> SimplexSolver::remove_slack_rows(std::span<const int> rows) {
    return impl_->remove_slack_rows(rows);
}

const LinearProgram& SimplexSolver::problem() const noexcept {
    return impl_->lp;
}

LpSolution SimplexBackend::solve(const LinearProgram& lp) {
    SimplexSolver solver(lp, options_);
    return solver.solve();
}

LpSolution solve_lp(const LinearProgram& lp) {
    SimplexBackend backend;
    return backend.solve(lp);
}

LpSolution solve_lp(const LinearProgram& lp, LpBackend& backend) {
    return backend.solve(lp);
}

}  // namespace prophetlab::lp

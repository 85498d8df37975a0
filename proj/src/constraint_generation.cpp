#include <algorithm>
#include <spdlog/spdlog.h>

#include "prophetlab/lp.hpp"

namespace prophetlab::lp {

namespace {

class IncrementalMaster final : public MasterProblem {
public:
    explicit IncrementalMaster(SimplexSolver& solver) : solver_(solver) {}
    int add_variable(double lower, double upper, double objective, std::string name) override {
        return solver_.add_variable(lower, upper, objective, std::move(name));
    }
    int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name) override {
        return solver_.add_row(terms, sense, rhs, std::move(name));
    }
    void set_bounds(int col, double lower, double upper) override { solver_.set_bounds(col, lower, upper); }
    int num_variables() const override { return solver_.problem().num_variables(); }
    int num_rows() const override { return solver_.problem().num_rows(); }

private:
    SimplexSolver& solver_;
};

class RebuiltMaster final : public MasterProblem {
public:
    explicit RebuiltMaster(LinearProgram& lp) : lp_(lp) {}
    int add_variable(double lower, double upper, double objective, std::string name) override {
        return lp_.add_variable(lower, upper, objective, std::move(name));
    }
    int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name) override {
        return lp_.add_row(terms, sense, rhs, std::move(name));
    }
    void set_bounds(int col, double lower, double upper) override { lp_.set_bounds(col, lower, upper); }
    int num_variables() const override { return lp_.num_variables(); }
    int num_rows() const override { return lp_.num_rows(); }

private:
    LinearProgram& lp_;
};

void purge_slack_rows(SimplexSolver& solver, const LpSolution& solution, const GenerationOptions& options,
                      std::vector<int>& slack_rounds) {
    const LinearProgram& lp = solver.problem();
    const std::vector<double> act = lp.activities(solution.primal);
    slack_rounds.resize(static_cast<std::size_t>(lp.num_rows()), 0);
    std::vector<int> stale;
    for (int r = 0; r < lp.num_rows(); ++r) {
        const auto u = static_cast<std::size_t>(r);
        const double gap = lp.rhs()[u] - act[u];
        const bool slack = lp.row_senses()[u] == RowSense::LessEqual   ? gap > options.tol
                           : lp.row_senses()[u] == RowSense::GreaterEqual ? -gap > options.tol
                                                                          : false;
        slack_rounds[u] = slack ? slack_rounds[u] + 1 : 0;
        if (slack_rounds[u] >= options.purge_after) {
            stale.push_back(r);
        }
    }
    if (stale.empty()) {
        return;
    }
    const std::vector<int> map = solver.remove_slack_rows(stale);
    std::vector<int> kept;
    for (std::size_t r = 0; r < map.size(); ++r) {
        if (map[r] >= 0) {
            kept.push_back(slack_rounds[r]);
        }
    }
    slack_rounds = std::move(kept);
}

}  // namespace

GenerationResult solve_with_constraint_generation(const std::function<LinearProgram()>& master_builder,
                                                  const ViolationOracle& oracle,
                                                  const GenerationOptions& options) {
    GenerationResult result;
    LinearProgram rebuilt;
    std::unique_ptr<SimplexSolver> solver;
    std::unique_ptr<MasterProblem> master;
    if (options.backend != nullptr) {
        rebuilt = master_builder();
        master = std::make_unique<RebuiltMaster>(rebuilt);
    } else {
        solver = std::make_unique<SimplexSolver>(master_builder(), options.simplex);
        master = std::make_unique<IncrementalMaster>(*solver);
    }
    const auto solve_master = [&] {
        return solver ? solver->solve() : options.backend->solve(rebuilt);
    };

    std::vector<int> slack_rounds;
    for (;;) {
        result.solution = solve_master();
        // The incremental solver's counters are cumulative.
        if (solver) {
            result.total_iterations = result.solution.stats.iterations;
        } else {
            result.total_iterations += result.solution.stats.iterations;
        }
        if (!result.solution.optimal()) {
            result.certified = result.solution.status == Status::Infeasible;
            return result;
        }
        std::vector<Separation> cuts = oracle(result.solution);
        std::vector<Separation> mandatory;
        for (Separation& s : cuts) {
            if (s.mandatory) mandatory.push_back(std::move(s));
        }
        std::erase_if(cuts, [&](const Separation& s) { return s.mandatory || !(s.violation > options.tol); });
        std::stable_sort(cuts.begin(), cuts.end(),
                         [](const Separation& a, const Separation& b) { return a.violation > b.violation; });
        result.max_violation = cuts.empty() ? 0.0 : cuts.front().violation;
        if (cuts.empty() && mandatory.empty()) {
            result.certified = true;
            return result;
        }
        if (result.rounds >= options.max_rounds) {
            result.iteration_limit = true;
            spdlog::warn("constraint generation stopped after {} rounds, max violation {:.3e}", result.rounds,
                         result.max_violation);
            return result;
        }
        ++result.rounds;
        if (solver && options.purge_after > 0) {
            purge_slack_rows(*solver, result.solution, options, slack_rounds);
        }
        for (Separation& s : mandatory) {
            s.apply(*master);
        }
        const auto take = std::min<std::size_t>(cuts.size(), static_cast<std::size_t>(std::max(1, options.max_cuts_per_round)));
        for (std::size_t c = 0; c < take; ++c) {
            cuts[c].apply(*master);
            result.active_set.push_back(cuts[c].label);
        }
        spdlog::debug("constraint generation round {}: {} updates, added {} cuts, worst violation {:.3e}, {} rows, {} pivots",
                      result.rounds, mandatory.size(), take, result.max_violation, master->num_rows(),
                      result.total_iterations);
    }
}

}  // namespace prophetlab::lp

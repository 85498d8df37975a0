#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace prophetlab::lp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class ObjectiveSense { Maximize, Minimize };
enum class RowSense { LessEqual, Equal, GreaterEqual };
enum class Status { Optimal, Infeasible, Unbounded };

const char* to_string(Status status);

struct Term {
    int col = 0;
    double value = 0.0;
};

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

// An LP over bounded variables with a row-wise sparse constraint matrix.
class LinearProgram {
public:
    explicit LinearProgram(ObjectiveSense sense = ObjectiveSense::Maximize) : sense_(sense) {}

    int add_variable(double lower, double upper, double objective, std::string name = {});
    int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name = {});
    int add_row(std::initializer_list<Term> terms, RowSense sense, double rhs, std::string name = {});
    void set_objective(int col, double value);
    void set_bounds(int col, double lower, double upper);
    // Drops the listed rows; the rest keep their order. Returns the new index of every old row, -1 if dropped.
    std::vector<int> remove_rows(std::span<const int> rows);
    void set_sense(ObjectiveSense sense) noexcept { sense_ = sense; }

    [[nodiscard]] ObjectiveSense sense() const noexcept { return sense_; }
    [[nodiscard]] int num_variables() const noexcept { return static_cast<int>(objective_.size()); }
    [[nodiscard]] int num_rows() const noexcept { return static_cast<int>(rhs_.size()); }

    [[nodiscard]] const std::vector<double>& objective() const noexcept { return objective_; }
    [[nodiscard]] const std::vector<double>& lower() const noexcept { return lower_; }
    [[nodiscard]] const std::vector<double>& upper() const noexcept { return upper_; }
    [[nodiscard]] const std::vector<RowSense>& row_senses() const noexcept { return row_sense_; }
    [[nodiscard]] const std::vector<double>& rhs() const noexcept { return rhs_; }
    [[nodiscard]] std::span<const Term> row(int r) const { return rows_[static_cast<std::size_t>(r)]; }
    [[nodiscard]] std::vector<Triplet> triplets() const;

    [[nodiscard]] std::string variable_name(int col) const;
    [[nodiscard]] std::string row_name(int row) const;

    // Throws ValidationError on NaN data, non-finite rhs, inverted bounds or bad column indices.
    void validate() const;

    // Row activities A x for a candidate point.
    [[nodiscard]] std::vector<double> activities(std::span<const double> x) const;
    [[nodiscard]] double objective_value(std::span<const double> x) const;

private:
    ObjectiveSense sense_;
    std::vector<double> objective_, lower_, upper_;
    std::vector<std::string> var_names_;
    std::vector<std::vector<Term>> rows_;
    std::vector<RowSense> row_sense_;
    std::vector<double> rhs_;
    std::vector<std::string> row_names_;
};

struct SolveStats {
    long iterations = 0;
    long phase1_iterations = 0;
    long dual_iterations = 0;
    long degenerate_pivots = 0;
    long bland_pivots = 0;
    int reinversions = 0;
    double primal_residual = 0.0;
    double complementarity_residual = 0.0;
    double duality_gap = 0.0;
};

struct LpSolution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> primal;
    // dual[r] is the marginal change of the objective per unit increase of rhs[r].
    std::vector<double> dual;
    std::vector<double> reduced_cost;
    SolveStats stats;

    [[nodiscard]] bool optimal() const noexcept { return status == Status::Optimal; }
};

struct SimplexOptions {
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    double pivot_tol = 1e-9;
    long bland_after_degenerate = 5000;
    double cost_perturbation = 1e-7;  // 0 disables the dual simplex cost shift
    long max_iterations = 5'000'000;
};

// Bounded revised simplex with a dense basis inverse. The solver keeps its basis between
// calls to solve(), so rows and columns appended in between are re-optimized from the
// previous optimum (dual simplex after row additions).
class SimplexSolver {
public:
    explicit SimplexSolver(LinearProgram lp, SimplexOptions options = {});
    ~SimplexSolver();
    SimplexSolver(SimplexSolver&&) noexcept;
    SimplexSolver& operator=(SimplexSolver&&) noexcept;

    LpSolution solve();

    int add_variable(double lower, double upper, double objective, std::string name = {});
    int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name = {});
    // Removes those listed rows whose logical is basic, keeping the basis. Returns the old-to-new row map.
    std::vector<int> remove_slack_rows(std::span<const int> rows);
    // Nonbasic variables move to their new bound; the next solve repairs the basis.
    void set_bounds(int col, double lower, double upper);

    [[nodiscard]] const LinearProgram& problem() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

class LpBackend {
public:
    virtual ~LpBackend() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    virtual LpSolution solve(const LinearProgram& lp) = 0;
};

class SimplexBackend final : public LpBackend {
public:
    explicit SimplexBackend(SimplexOptions options = {}) : options_(options) {}
    [[nodiscard]] std::string name() const override { return "builtin-simplex"; }
    LpSolution solve(const LinearProgram& lp) override;

private:
    SimplexOptions options_;
};

LpSolution solve_lp(const LinearProgram& lp);
LpSolution solve_lp(const LinearProgram& lp, LpBackend& backend);

// Fixed-format text dump; the grammar is described in docs/lp_format.md.
void write_lp_text(const LinearProgram& lp, std::ostream& out);
std::string to_lp_text(const LinearProgram& lp);

// ---------------------------------------------------------------------------
// Constraint generation
// ---------------------------------------------------------------------------

class MasterProblem {
public:
    virtual ~MasterProblem() = default;
    virtual int add_variable(double lower, double upper, double objective, std::string name = {}) = 0;
    virtual int add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name = {}) = 0;
    virtual void set_bounds(int col, double lower, double upper) = 0;
    [[nodiscard]] virtual int num_variables() const = 0;
    [[nodiscard]] virtual int num_rows() const = 0;
};

struct Separation {
    double violation = 0.0;
    std::string label;
    std::function<void(MasterProblem&)> apply;
    // Applied in every round it is returned, outside the ranking and the per-round limit.
    bool mandatory = false;
};

// Returns violated candidates for the current master optimum (empty when none).
using ViolationOracle = std::function<std::vector<Separation>(const LpSolution&)>;

struct GenerationOptions {
    double tol = 1e-9;
    int max_rounds = 10000;
    int max_cuts_per_round = 1;
    SimplexOptions simplex;
    // When set, every round is re-solved from scratch with this backend.
    LpBackend* backend = nullptr;
    // Rows slack for this many consecutive rounds are dropped (0 keeps every row). Only safe when the
    // oracle separates every row, including the builder's; ignored with a backend.
    int purge_after = 0;
};

struct GenerationResult {
    LpSolution solution;
    std::vector<std::string> active_set;
    int rounds = 0;
    bool certified = false;
    bool iteration_limit = false;
    double max_violation = 0.0;
    long total_iterations = 0;
};

GenerationResult solve_with_constraint_generation(const std::function<LinearProgram()>& master_builder,
                                                  const ViolationOracle& oracle,
                                                  const GenerationOptions& options = {});

}  // namespace prophetlab::lp

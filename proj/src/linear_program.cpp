#include <cmath>
#include <ostream>
#include <sstream>

#include "prophetlab/errors.hpp"
#include "prophetlab/lp.hpp"

namespace prophetlab::lp {

const char* to_string(Status status) {
    switch (status) {
        case Status::Optimal:
            return "optimal";
        case Status::Infeasible:
            return "infeasible";
        case Status::Unbounded:
            return "unbounded";
    }
    return "unknown";
}

int LinearProgram::add_variable(double lower, double upper, double objective, std::string name) {
    lower_.push_back(lower);
    upper_.push_back(upper);
    objective_.push_back(objective);
    var_names_.push_back(std::move(name));
    return num_variables() - 1;
}

int LinearProgram::add_row(std::span<const Term> terms, RowSense sense, double rhs, std::string name) {
    rows_.emplace_back(terms.begin(), terms.end());
    row_sense_.push_back(sense);
    rhs_.push_back(rhs);
    row_names_.push_back(std::move(name));
    return num_rows() - 1;
}

int LinearProgram::add_row(std::initializer_list<Term> terms, RowSense sense, double rhs, std::string name) {
    return add_row(std::span<const Term>(terms.begin(), terms.size()), sense, rhs, std::move(name));
}

std::vector<int> LinearProgram::remove_rows(std::span<const int> rows) {
    std::vector<int> map(rows_.size(), 0);
    for (int r : rows) {
        map.at(static_cast<std::size_t>(r)) = -1;
    }
    std::size_t next = 0;
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        if (map[r] < 0) {
            continue;
        }
        map[r] = static_cast<int>(next);
        if (next != r) {
            rows_[next] = std::move(rows_[r]);
            row_sense_[next] = row_sense_[r];
            rhs_[next] = rhs_[r];
            row_names_[next] = std::move(row_names_[r]);
        }
        ++next;
    }
    rows_.resize(next);
    row_sense_.resize(next);
    rhs_.resize(next);
    row_names_.resize(next);
    return map;
}

void LinearProgram::set_bounds(int col, double lower, double upper) {
    lower_.at(static_cast<std::size_t>(col)) = lower;
    upper_.at(static_cast<std::size_t>(col)) = upper;
}

void LinearProgram::set_objective(int col, double value) {
    objective_.at(static_cast<std::size_t>(col)) = value;
}

std::vector<Triplet> LinearProgram::triplets() const {
    std::vector<Triplet> out;
    for (int r = 0; r < num_rows(); ++r) {
        for (const Term& t : rows_[static_cast<std::size_t>(r)]) {
            out.push_back({r, t.col, t.value});
        }
    }
    return out;
}

std::string LinearProgram::variable_name(int col) const {
    const std::string& given = var_names_.at(static_cast<std::size_t>(col));
    return given.empty() ? "x" + std::to_string(col) : given;
}

std::string LinearProgram::row_name(int row) const {
    const std::string& given = row_names_.at(static_cast<std::size_t>(row));
    return given.empty() ? "r" + std::to_string(row) : given;
}

void LinearProgram::validate() const {
    for (int j = 0; j < num_variables(); ++j) {
        const auto uj = static_cast<std::size_t>(j);
        if (std::isnan(objective_[uj]) || std::isinf(objective_[uj])) {
            throw ValidationError("objective coefficient of " + variable_name(j) + " is not finite");
        }
        if (std::isnan(lower_[uj]) || std::isnan(upper_[uj]) || lower_[uj] > upper_[uj] ||
            lower_[uj] == kInfinity || upper_[uj] == -kInfinity) {
            throw ValidationError("invalid bounds on " + variable_name(j));
        }
    }
    for (int r = 0; r < num_rows(); ++r) {
        if (!std::isfinite(rhs_[static_cast<std::size_t>(r)])) {
            throw ValidationError("right-hand side of " + row_name(r) + " is not finite");
        }
        for (const Term& t : rows_[static_cast<std::size_t>(r)]) {
            if (t.col < 0 || t.col >= num_variables()) {
                throw ValidationError("row " + row_name(r) + " references unknown column " + std::to_string(t.col));
            }
            if (!std::isfinite(t.value)) {
                throw ValidationError("row " + row_name(r) + " has a non-finite coefficient");
            }
        }
    }
}

std::vector<double> LinearProgram::activities(std::span<const double> x) const {
    std::vector<double> act(rhs_.size(), 0.0);
    for (std::size_t r = 0; r < rows_.size(); ++r) {
        for (const Term& t : rows_[r]) {
            act[r] += t.value * x[static_cast<std::size_t>(t.col)];
        }
    }
    return act;
}

double LinearProgram::objective_value(std::span<const double> x) const {
    double v = 0.0;
    for (std::size_t j = 0; j < objective_.size(); ++j) {
        v += objective_[j] * x[j];
    }
    return v;
}

namespace {

void write_number(std::ostream& out, double v) {
    if (v == kInfinity) {
        out << "+inf";
    } else if (v == -kInfinity) {
        out << "-inf";
    } else {
        out << v;
    }
}

void write_linear(std::ostream& out, const LinearProgram& lp, std::span<const Term> terms) {
    if (terms.empty()) {
        out << " 0 " << (lp.num_variables() > 0 ? lp.variable_name(0) : "x0");
        return;
    }
    for (const Term& t : terms) {
        out << (t.value < 0 ? " - " : " + ") << std::abs(t.value) << ' ' << lp.variable_name(t.col);
    }
}

}  // namespace

void write_lp_text(const LinearProgram& lp, std::ostream& out) {
    const auto old_precision = out.precision(17);
    out << (lp.sense() == ObjectiveSense::Maximize ? "Maximize\n" : "Minimize\n");
    std::vector<Term> obj;
    for (int j = 0; j < lp.num_variables(); ++j) {
        if (lp.objective()[static_cast<std::size_t>(j)] != 0.0) {
            obj.push_back({j, lp.objective()[static_cast<std::size_t>(j)]});
        }
    }
    out << " obj:";
    write_linear(out, lp, obj);
    out << "\nSubject To\n";
    for (int r = 0; r < lp.num_rows(); ++r) {
        out << ' ' << lp.row_name(r) << ':';
        write_linear(out, lp, lp.row(r));
        switch (lp.row_senses()[static_cast<std::size_t>(r)]) {
            case RowSense::LessEqual:
                out << " <= ";
                break;
            case RowSense::Equal:
                out << " = ";
                break;
            case RowSense::GreaterEqual:
                out << " >= ";
                break;
        }
        out << lp.rhs()[static_cast<std::size_t>(r)] << '\n';
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.num_variables(); ++j) {
        const double lo = lp.lower()[static_cast<std::size_t>(j)];
        const double hi = lp.upper()[static_cast<std::size_t>(j)];
        out << ' ';
        if (lo == -kInfinity && hi == kInfinity) {
            out << lp.variable_name(j) << " free\n";
            continue;
        }
        write_number(out, lo);
        out << " <= " << lp.variable_name(j) << " <= ";
        write_number(out, hi);
        out << '\n';
    }
    out << "End\n";
    out.precision(old_precision);
}

std::string to_lp_text(const LinearProgram& lp) {
    std::ostringstream out;
    write_lp_text(lp, out);
    return out.str();
}

}  // namespace prophetlab::lp

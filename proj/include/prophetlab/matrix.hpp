#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace prophetlab {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
        if (rows < 0 || cols < 0) {
            throw std::invalid_argument("matrix dimensions must be nonnegative");
        }
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        const int r = static_cast<int>(rows.size());
        const int c = r == 0 ? 0 : static_cast<int>(rows.front().size());
        Matrix out(r, c);
        for (int i = 0; i < r; ++i) {
            if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != c) {
                throw std::invalid_argument("ragged rows in matrix literal");
            }
            for (int j = 0; j < c; ++j) {
                out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            }
        }
        return out;
    }

    [[nodiscard]] int rows() const noexcept { return rows_; }
    [[nodiscard]] int cols() const noexcept { return cols_; }

    double& operator()(int i, int j) { return data_[index(i, j)]; }
    double operator()(int i, int j) const { return data_[index(i, j)]; }

    [[nodiscard]] std::span<const double> row(int i) const {
        return {data_.data() + index(i, 0), static_cast<std::size_t>(cols_)};
    }
    [[nodiscard]] std::span<double> row(int i) { return {data_.data() + index(i, 0), static_cast<std::size_t>(cols_)}; }

    [[nodiscard]] std::vector<std::vector<double>> to_rows() const {
        std::vector<std::vector<double>> out;
        for (int i = 0; i < rows_; ++i) {
            const auto r = row(i);
            out.emplace_back(r.begin(), r.end());
        }
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    [[nodiscard]] std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

}  // namespace prophetlab

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace adaptrack {

/// Dense row-major matrix of costs or scores.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct Assignment {
    std::vector<std::pair<std::size_t, std::size_t>> matches;  // (row, col), sorted by row
    std::vector<std::size_t> unmatched_rows;
    std::vector<std::size_t> unmatched_cols;
};

/// Min-cost partial assignment restricted to pairs with cost < cost_limit.
///
/// Minimizes the sum over matched pairs of (cost - cost_limit), so every
/// admissible pair is worth taking and the optimum is maximal: no admissible
/// pair with both ends free is left over. With a limit above every entry this
/// is the ordinary rectangular assignment problem. Ties resolve by the
/// row-major augmenting order of the shortest-path Hungarian method.
///
/// Throws ValidationError on NaN or -inf entries; +inf marks a forbidden pair.
Assignment solve_assignment(const Matrix& cost, double cost_limit);

/// Sum of cost(row, col) over the matches.
double assignment_cost(const Matrix& cost, const Assignment& a);

}  // namespace adaptrack

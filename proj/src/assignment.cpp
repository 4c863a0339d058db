#include <adaptrack/assignment.hpp>
#include <adaptrack/error.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace adaptrack {
namespace {

// Shortest augmenting path Hungarian method for n <= m. a is n x m, 1-based
// internally. Returns, for each row, the assigned column.
std::vector<std::size_t> hungarian(const Matrix& a) {
    const std::size_t n = a.rows();
    const std::size_t m = a.cols();
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) {
                    continue;
                }
                const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<std::size_t> row_to_col(n, 0);
    for (std::size_t j = 1; j <= m; ++j) {
        if (p[j] != 0) {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    return row_to_col;
}

}  // namespace

Assignment solve_assignment(const Matrix& cost, double cost_limit) {
    const std::size_t rows = cost.rows();
    const std::size_t cols = cost.cols();
    if (std::isnan(cost_limit)) {
        throw ValidationError("assignment: cost limit is NaN");
    }

    // An infinite limit means "maximum cardinality first"; a finite stand-in
    // large enough that one extra pair outweighs any cost spread keeps it exact.
    double limit = cost_limit;
    if (std::isinf(cost_limit) && cost_limit > 0.0) {
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < rows * cols; ++i) {
            const double value = cost.data()[i];
            if (std::isfinite(value)) {
                lo = any ? std::min(lo, value) : value;
                hi = any ? std::max(hi, value) : value;
                any = true;
            }
        }
        limit = hi + (hi - lo + 1.0) * static_cast<double>(std::min(rows, cols) + 1);
    }

    // Reduced problem: admissible pairs get (cost - limit) < 0, everything else 0.
    // A full rectangular assignment on the reduced matrix then drops its zero pairs.
    const bool transpose = rows > cols;
    Matrix reduced(transpose ? cols : rows, transpose ? rows : cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double value = cost(r, c);
            if (std::isnan(value) || value == -std::numeric_limits<double>::infinity()) {
                throw ValidationError("assignment: cost(" + std::to_string(r) + ", " + std::to_string(c) +
                                      ") is not a usable number");
            }
            const double gain = value < limit ? value - limit : 0.0;
            if (transpose) {
                reduced(c, r) = gain;
            } else {
                reduced(r, c) = gain;
            }
        }
    }

    Assignment result;
    std::vector<char> row_used(rows, 0), col_used(cols, 0);
    if (rows > 0 && cols > 0) {
        const auto picks = hungarian(reduced);
        for (std::size_t k = 0; k < picks.size(); ++k) {
            const std::size_t r = transpose ? picks[k] : k;
            const std::size_t c = transpose ? k : picks[k];
            if (cost(r, c) < limit) {
                result.matches.emplace_back(r, c);
                row_used[r] = 1;
                col_used[c] = 1;
            }
        }
    }
    std::sort(result.matches.begin(), result.matches.end());
    for (std::size_t r = 0; r < rows; ++r) {
        if (!row_used[r]) {
            result.unmatched_rows.push_back(r);
        }
    }
    for (std::size_t c = 0; c < cols; ++c) {
        if (!col_used[c]) {
            result.unmatched_cols.push_back(c);
        }
    }
    return result;
}

double assignment_cost(const Matrix& cost, const Assignment& a) {
    double total = 0.0;
    for (const auto& [r, c] : a.matches) {
        total += cost(r, c);
    }
    return total;
}

}  // namespace adaptrack

#include "oracles.hpp"

#include <adaptrack/error.hpp>
#include <adaptrack/rng.hpp>

#include <gtest/gtest.h>

#include <limits>

using namespace adaptrack;

namespace {

Matrix dyadic(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (std::size_t i = 0; i < r * c; ++i) {
        m.data()[i] = static_cast<double>(rng.below(1024)) / 1024.0;
    }
    return m;
}

void expect_consistent(const Matrix& cost, const Assignment& a) {
    std::vector<int> rows(cost.rows()), cols(cost.cols());
    for (auto [r, c] : a.matches) {
        ++rows[r];
        ++cols[c];
    }
    for (auto r : a.unmatched_rows) {
        ++rows[r];
    }
    for (auto c : a.unmatched_cols) {
        ++cols[c];
    }
    for (int v : rows) {
        EXPECT_EQ(v, 1);
    }
    for (int v : cols) {
        EXPECT_EQ(v, 1);
    }
}

}  // namespace

TEST(Assignment, SquareKnownOptimum) {
    Matrix m(3, 3);
    const double v[] = {4, 1, 3, 2, 0, 5, 3, 2, 2};
    std::copy(std::begin(v), std::end(v), m.data());
    const auto a = solve_assignment(m, std::numeric_limits<double>::infinity());
    EXPECT_EQ(assignment_cost(m, a), 5.0);
    ASSERT_EQ(a.matches.size(), 3u);
}

TEST(Assignment, EmptyDimensions) {
    const auto a = solve_assignment(Matrix(0, 4), 1.0);
    EXPECT_TRUE(a.matches.empty());
    EXPECT_EQ(a.unmatched_cols.size(), 4u);
    const auto b = solve_assignment(Matrix(3, 0), 1.0);
    EXPECT_EQ(b.unmatched_rows.size(), 3u);
}

TEST(Assignment, LimitExcludesPairs) {
    Matrix m(2, 2, 0.9);
    m(0, 0) = 0.1;
    const auto a = solve_assignment(m, 0.5);
    ASSERT_EQ(a.matches.size(), 1u);
    EXPECT_EQ(a.matches[0], std::make_pair(std::size_t{0}, std::size_t{0}));
    EXPECT_EQ(a.unmatched_rows, std::vector<std::size_t>{1});
}

TEST(Assignment, RejectsNaN) {
    Matrix m(2, 2, 0.5);
    m(1, 0) = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(solve_assignment(m, 1.0), ValidationError);
}

TEST(Assignment, InfinityForbidsPair) {
    Matrix m(2, 2, std::numeric_limits<double>::infinity());
    m(0, 1) = 0.2;
    const auto a = solve_assignment(m, std::numeric_limits<double>::infinity());
    ASSERT_EQ(a.matches.size(), 1u);
    EXPECT_EQ(a.matches[0].second, 1u);
}

TEST(Assignment, RectangularMatchesPermutationOracle) {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const auto r = 1 + rng.below(6);
        const auto c = 1 + rng.below(6);
        const auto m = dyadic(rng, r, c);
        const auto a = solve_assignment(m, std::numeric_limits<double>::infinity());
        expect_consistent(m, a);
        EXPECT_EQ(a.matches.size(), std::min(r, c));
        EXPECT_EQ(assignment_cost(m, a), oracle::permutation_minimum(m));
    }
}

TEST(Assignment, LimitedMatchesPartialOracle) {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        const auto r = rng.below(6);
        const auto c = rng.below(6);
        const auto m = dyadic(rng, r, c);
        const double limit = static_cast<double>(rng.below(1024)) / 1024.0;
        const auto a = solve_assignment(m, limit);
        expect_consistent(m, a);
        double objective = 0.0;
        for (auto [i, j] : a.matches) {
            ASSERT_LT(m(i, j), limit);
            objective += m(i, j) - limit;
        }
        EXPECT_EQ(objective, oracle::assignment_objective(m, limit));
    }
}

TEST(Assignment, TransposeInvariantCost) {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const auto m = dyadic(rng, 1 + rng.below(6), 1 + rng.below(6));
        Matrix t(m.cols(), m.rows());
        for (std::size_t i = 0; i < m.rows(); ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
                t(j, i) = m(i, j);
            }
        }
        auto objective = [](const Matrix& x) {
            const auto a = solve_assignment(x, 0.75);
            return assignment_cost(x, a) - 0.75 * static_cast<double>(a.matches.size());
        };
        EXPECT_EQ(objective(m), objective(t));
    }
}

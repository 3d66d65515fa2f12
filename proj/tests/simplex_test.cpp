#include <sbp/simplex.hpp>

#include <gtest/gtest.h>

#include <random>

namespace {

using sbp::lp::StandardForm;

// Exhaustive vertex enumeration: the optimum of a bounded feasible LP in
// standard form is attained at a basic feasible solution.
std::optional<double> vertex_oracle(const StandardForm& p) {
    const auto m = p.a.rows();
    const auto n = p.a.cols();
    std::optional<double> best;
    std::vector<int> pick(static_cast<std::size_t>(m));
    std::function<void(Eigen::Index, Eigen::Index)> rec = [&](Eigen::Index start, Eigen::Index depth) {
        if (depth == m) {
            Eigen::MatrixXd b(m, m);
            for (Eigen::Index r = 0; r < m; ++r) b.col(r) = p.a.col(pick[static_cast<std::size_t>(r)]);
            Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
            if (!lu.isInvertible()) return;
            const Eigen::VectorXd xb = lu.solve(p.b);
            if (xb.minCoeff() < -1e-9) return;
            double obj = 0.0;
            for (Eigen::Index r = 0; r < m; ++r) {
                const auto j = pick[static_cast<std::size_t>(r)];
                if (p.fixed_zero[static_cast<std::size_t>(j)] && std::abs(xb(r)) > 1e-9) return;
                obj += p.c(j) * xb(r);
            }
            if (!best || obj > *best) best = obj;
            return;
        }
        for (Eigen::Index j = start; j < n; ++j) {
            pick[static_cast<std::size_t>(depth)] = static_cast<int>(j);
            rec(j + 1, depth + 1);
        }
    };
    rec(0, 0);
    return best;
}

TEST(Simplex, SmallTextbookProblem) {
    // max 3x + 2y  s.t. x + y + s1 = 4, x + 3y + s2 = 6
    StandardForm p;
    p.a.resize(2, 4);
    p.a << 1, 1, 1, 0, 1, 3, 0, 1;
    p.b = Eigen::Vector2d(4, 6);
    p.c = Eigen::Vector4d(3, 2, 0, 0);
    p.fixed_zero.assign(4, false);
    const auto res = sbp::lp::solve(p);
    EXPECT_NEAR(res.objective, 12.0, 1e-12);
    EXPECT_NEAR(res.x(0), 4.0, 1e-12);
}

TEST(Simplex, DetectsInfeasibility) {
    StandardForm p;
    p.a.resize(2, 2);
    p.a << 1, 1, 1, 1;
    p.b = Eigen::Vector2d(1, 2);
    p.c = Eigen::Vector2d(1, 0);
    p.fixed_zero.assign(2, false);
    EXPECT_THROW(sbp::lp::solve(p), sbp::LpInfeasible);
}

TEST(Simplex, DetectsUnboundedness) {
    StandardForm p;
    p.a.resize(1, 2);
    p.a << 1, -1;
    p.b = Eigen::VectorXd::Constant(1, 1.0);
    p.c = Eigen::Vector2d(1, 0);
    p.fixed_zero.assign(2, false);
    EXPECT_THROW(sbp::lp::solve(p), sbp::LpUnbounded);
}

TEST(Simplex, HandlesRedundantRows) {
    // second row = first row
    StandardForm p;
    p.a.resize(3, 3);
    p.a << 1, 1, 1, 1, 1, 1, 0, 1, 0;
    p.b = Eigen::Vector3d(2, 2, 0.5);
    p.c = Eigen::Vector3d(1, 0, 2);
    p.fixed_zero.assign(3, false);
    const auto res = sbp::lp::solve(p);
    EXPECT_NEAR(res.objective, 3.0, 1e-12);
}

TEST(Simplex, RespectsFixedZeroColumns) {
    StandardForm p;
    p.a.resize(1, 3);
    p.a << 1, 1, 1;
    p.b = Eigen::VectorXd::Constant(1, 1.0);
    p.c = Eigen::Vector3d(5, 1, 0);
    p.fixed_zero = {true, false, false};
    const auto res = sbp::lp::solve(p);
    EXPECT_NEAR(res.objective, 1.0, 1e-12);
    EXPECT_EQ(res.x(0), 0.0);
}

TEST(Simplex, MatchesVertexEnumerationOnRandomBoundedProblems) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> coef(-3, 4);
    int solved = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const Eigen::Index m = 2 + trial % 3;
        const Eigen::Index n = m + 2 + trial % 3;
        StandardForm p;
        p.a.resize(m + 1, n);
        for (Eigen::Index r = 0; r < m; ++r)
            for (Eigen::Index j = 0; j < n; ++j) p.a(r, j) = coef(rng);
        p.a.row(m).setOnes();  // bounded: sum x = 5
        p.b.resize(m + 1);
        for (Eigen::Index r = 0; r < m; ++r) p.b(r) = coef(rng);
        p.b(m) = 5;
        p.c.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) p.c(j) = coef(rng);
        p.fixed_zero.assign(static_cast<std::size_t>(n), false);
        const auto oracle = vertex_oracle(p);
        if (!oracle) {
            EXPECT_THROW(sbp::lp::solve(p), sbp::LpInfeasible) << "trial " << trial;
            continue;
        }
        const auto res = sbp::lp::solve(p);
        EXPECT_NEAR(res.objective, *oracle, 1e-8) << "trial " << trial;
        EXPECT_LE((p.a * res.x - p.b).cwiseAbs().maxCoeff(), 1e-8);
        EXPECT_GE(res.x.minCoeff(), -1e-9);
        ++solved;
    }
    EXPECT_GT(solved, 50);
}

TEST(Simplex, IsDeterministic) {
    StandardForm p;
    p.a.resize(2, 5);
    p.a << 1, 1, 1, 0, 0, 1, 1, 0, 1, 1;
    p.b = Eigen::Vector2d(1, 1);
    p.c = Eigen::VectorXd::Ones(5);
    p.fixed_zero.assign(5, false);
    const auto a = sbp::lp::solve(p);
    const auto b = sbp::lp::solve(p);
    EXPECT_EQ(a.x, b.x);
}

}  // namespace

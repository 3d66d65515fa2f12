#include <sbp/lp_core.hpp>

#include <gtest/gtest.h>

namespace {

using namespace sbp;

JobModel fig1_model() { return JobModel({{0, 1}, {1, 0}}, {1, 2}, {1, 1}); }

TEST(AssembleLp, SinglePhaseKmaxOneRowsMatchHandDerivation) {
    const JobModel m = JobModel::exponential(1.0, 1.0);
    const ConfigSpace s(1, 1);
    const auto p = assemble_lp(m, s, CostFn::zero(s), 0.0);
    const auto& lay = p.layout;
    ASSERT_EQ(p.eq.rows(), 2 + 1 + 1);
    // k=(0): inflow mu*pi(1), outflow u(0)
    EXPECT_EQ(p.eq(0, lay.pi(1)), 1.0);
    EXPECT_EQ(p.eq(0, lay.u(0, 0)), -1.0);
    EXPECT_EQ(p.eq(0, lay.pi(0)), 0.0);
    // k=(1): inflow u(0), outflow mu*pi(1)
    EXPECT_EQ(p.eq(1, lay.u(0, 0)), 1.0);
    EXPECT_EQ(p.eq(1, lay.pi(1)), -1.0);
    EXPECT_EQ(p.eq(1, lay.u(0, 1)), -1.0);  // bounded to zero below
    EXPECT_TRUE(p.fixed_zero[lay.u(0, 1)]);
    // throughput row: u(0) - lambda phi = 0, u(1) excluded
    EXPECT_EQ(p.eq(3, lay.u(0, 0)), 1.0);
    EXPECT_EQ(p.eq(3, lay.u(0, 1)), 0.0);
    EXPECT_EQ(p.eq(3, lay.phi()), -1.0);
}

TEST(AssembleLp, FullConfigurationsHaveNoRequestVariables) {
    const JobModel m = fig1_model();
    const ConfigSpace s(2, 3);
    const auto p = assemble_lp(m, s, CostFn::zero(s), 0.1);
    const std::size_t full = s.index_of({3, 0});
    for (std::size_t i = 0; i < 2; ++i) EXPECT_TRUE(p.fixed_zero[p.layout.u(i, full)]);
    EXPECT_FALSE(p.fixed_zero[p.layout.u(0, s.index_of({2, 0}))]);
}

TEST(AssembleLp, FigureOneRowCounts) {
    const ConfigSpace s(2, 2);
    const auto p = assemble_lp(fig1_model(), s, CostFn::zero(s), 0.1);
    EXPECT_EQ(p.eq.rows(), 6 + 1 + 2);
    EXPECT_EQ(p.budget.size(), static_cast<Eigen::Index>(p.layout.num_vars()));
}

TEST(AssembleLp, BalanceRowsReproduceStationaryResidual) {
    const JobModel m = fig1_model();
    const ConfigSpace s(2, 3);
    const auto p = assemble_lp(m, s, CostFn::zero(s), 0.1);
    std::vector<double> pi(s.size());
    std::vector<std::vector<double>> u(2, std::vector<double>(s.size()));
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.layout.num_vars()));
    for (std::size_t n = 0; n < s.size(); ++n) {
        pi[n] = 0.1 * (n + 1);
        x(p.layout.pi(n)) = pi[n];
        for (std::size_t i = 0; i < 2; ++i) {
            u[i][n] = s.is_full(n) ? 0.0 : 0.3 * (i + 1) + 0.05 * n;
            x(p.layout.u(i, n)) = u[i][n];
        }
    }
    const auto balance = stationary_balance(m, s, pi, u);
    const Eigen::VectorXd rows = p.eq.topRows(s.size()) * x;
    for (std::size_t n = 0; n < s.size(); ++n) EXPECT_NEAR(rows(n), balance[n], 1e-12);
}

TEST(SolveLp, AnalyticSinglePhaseInstances) {
    const ConfigSpace s(1, 1);
    const auto one = solve_lp(assemble_lp(JobModel::exponential(1.0, 1.0), s, CostFn::zero(s), 0.0));
    EXPECT_NEAR(one.phi, 1.0, 1e-9);
    EXPECT_NEAR(one.pi[1], 1.0, 1e-9);
    EXPECT_NEAR(one.pi[0], 0.0, 1e-9);
    EXPECT_NEAR(one.u[0][0], 1.0, 1e-9);
    const auto two = solve_lp(assemble_lp(JobModel::exponential(1.0, 2.0), s, CostFn::zero(s), 0.0));
    EXPECT_NEAR(two.phi, 0.5, 1e-9);
}

TEST(SolveLp, SinglePhaseAlwaysFullThroughput) {
    // With h = 0 and one phase the server stays full: throughput kmax * mu.
    for (int kmax = 1; kmax <= 5; ++kmax) {
        const ConfigSpace s(1, kmax);
        const auto sol = solve_lp(assemble_lp(JobModel::exponential(1.5, 2.0), s, CostFn::zero(s), 0.0));
        EXPECT_NEAR(sol.phi, kmax * 1.5 / 2.0, 1e-9);
    }
}

TEST(SolveLp, InfeasibleBudgetIsReported) {
    const ConfigSpace s(2, 2);
    std::vector<double> h(s.size(), 1.0);
    h[0] = 0.0;
    const auto cost = CostFn::from_table(s, h);
    EXPECT_THROW(solve_lp(assemble_lp(fig1_model(), s, cost, 0.5)), LpInfeasible);
}

TEST(SolveLp, FigureOneFeasibilityResiduals) {
    const JobModel m = fig1_model();
    const ConfigSpace s(2, 3);
    const auto cost = CostFn::overcommit(s, {{1, 2}}, {3});
    const auto p = assemble_lp(m, s, cost, 0.1);
    const auto sol = solve_lp(p);
    EXPECT_GT(sol.phi, 0.0);
    EXPECT_LE(sol.residual, 1e-8);
    EXPECT_LE(stationary_residual(m, s, sol.pi, sol.u), 1e-8);
    double hpi = 0.0, mass = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        hpi += cost(n) * sol.pi[n];
        mass += sol.pi[n];
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_LE(hpi, 0.1 * (1.0 - sol.pi[0]) + 1e-8);
    for (std::size_t i = 0; i < 2; ++i) {
        double flow = 0.0;
        for (std::size_t n = 0; n < s.size(); ++n) if (!s.is_full(n)) flow += sol.u[i][n];
        EXPECT_NEAR(flow, sol.phi * m.arrival_coeff(i), 1e-8);
    }
}

TEST(SolveLp, PhiIsMonotoneInBudget) {
    const JobModel m = fig1_model();
    const ConfigSpace s(2, 3);
    const auto cost = CostFn::overcommit(s, {{1, 2}}, {3});
    double prev = 0.0;
    for (double eps : {0.05, 0.1, 0.5, 2.0}) {
        const double phi = solve_lp(assemble_lp(m, s, cost, eps)).phi;
        EXPECT_GE(phi, prev - 1e-9);
        prev = phi;
    }
}

TEST(SolveLp, LargeBudgetMatchesZeroCost) {
    const JobModel m = fig1_model();
    const ConfigSpace s(2, 3);
    const double free = solve_lp(assemble_lp(m, s, CostFn::zero(s), 0.0)).phi;
    const auto cost = CostFn::overcommit(s, {{1, 2}}, {3});
    EXPECT_NEAR(solve_lp(assemble_lp(m, s, cost, 1e6)).phi, free, 1e-9);
}

TEST(SolveLp, InvariantUnderPhaseRelabeling) {
    const ConfigSpace s(2, 3);
    const JobModel a({{0, 1}, {0.5, 0}}, {1, 2}, {1, 0.5});
    const JobModel b({{0, 0.5}, {1, 0}}, {2, 1}, {0.5, 1});
    const auto ca = CostFn::overcommit(s, {{1, 2}}, {3});
    const auto cb = CostFn::overcommit(s, {{2, 1}}, {3});
    EXPECT_NEAR(solve_lp(assemble_lp(a, s, ca, 0.2)).phi, solve_lp(assemble_lp(b, s, cb, 0.2)).phi, 1e-9);
}

TEST(StationaryResidual, HandBuiltBalanceIsExact) {
    const JobModel m = JobModel::exponential(1.0, 1.0);
    const ConfigSpace s(1, 1);
    const std::vector<double> pi{0.4, 0.6};
    const std::vector<std::vector<double>> u{{0.6, 0.0}};
    EXPECT_LE(stationary_residual(m, s, pi, u), 1e-12);
}

TEST(StationaryResidual, PureOutflowIsUnbalanced) {
    const ConfigSpace s(2, 2);
    const std::vector<double> pi(s.size(), 1.0 / s.size());
    const std::vector<std::vector<double>> u(2, std::vector<double>(s.size(), 0.0));
    EXPECT_GT(stationary_residual(fig1_model(), s, pi, u), 0.0);
}

TEST(NbarStar, Values) {
    EXPECT_DOUBLE_EQ(nbar_star(1.0, 10.0), 10.0);
    EXPECT_DOUBLE_EQ(nbar_star(0.5, 10.0), 20.0);
    EXPECT_DOUBLE_EQ(nbar_star(1.0, 10.4), 10.4);
    EXPECT_EQ(std::ceil(nbar_star(1.0, 10.4)), 11.0);
    EXPECT_THROW(nbar_star(0.0, 1.0), DegeneratePolicy);
}

}  // namespace

#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/simplex.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace sbp {

/// Variable layout of the single-server LP: [phi | pi over K | u_0 over K | ... | u_{I-1} over K].
struct LpLayout {
    std::size_t num_configs = 0;
    std::size_t num_phases = 0;

    [[nodiscard]] std::size_t phi() const noexcept { return 0; }
    [[nodiscard]] std::size_t pi(std::size_t k) const noexcept { return 1 + k; }
    [[nodiscard]] std::size_t u(std::size_t phase, std::size_t k) const noexcept {
        return 1 + num_configs * (1 + phase) + k;
    }
    [[nodiscard]] std::size_t num_vars() const noexcept { return 1 + num_configs * (1 + num_phases); }
};

/// Throughput-maximization LP over stationary distributions and transition
/// frequencies of a single server.
///
/// Equality block rows: |K| balance rows, one normalization row, |I|
/// throughput rows. One inequality row: the conditional cost budget.
struct LpProblem {
    LpLayout layout;
    Eigen::VectorXd objective;
    Eigen::MatrixXd eq;
    Eigen::VectorXd eq_rhs;
    Eigen::RowVectorXd budget;
    double budget_rhs = 0.0;
    std::vector<bool> fixed_zero;
};

struct LpSolution {
    double phi = 0.0;
    std::vector<double> pi;
    std::vector<std::vector<double>> u;  // u[phase][config]
    double residual = 0.0;
    std::size_t iterations = 0;
};

/// Left side minus right side of the balance equation at every configuration.
inline std::vector<double> stationary_balance(const JobModel& model, const ConfigSpace& space,
                                              const std::vector<double>& pi,
                                              const std::vector<std::vector<double>>& u) {
    const std::size_t phases = space.num_phases();
    std::vector<double> out(space.size(), 0.0);
    for (std::size_t n = 0; n < space.size(); ++n) {
        const Config& k = space.config_at(n);
        double inflow = 0.0;
        double outflow = 0.0;
        for (std::size_t i = 0; i < phases; ++i) {
            if (const std::size_t m = space.minus(n, i); m != kNoConfig) inflow += u[i][m];
            if (const std::size_t m = space.plus(n, i); m != kNoConfig) {
                inflow += (k[i] + 1) * model.departure_rate(i) * pi[m];
            }
            for (std::size_t j = 0; j < phases; ++j) {
                if (j == i) continue;
                // a job in phase i of k + e_i - e_j moves to phase j
                if (const std::size_t m = space.move(n, j, i); m != kNoConfig) {
                    inflow += (k[i] + 1) * model.internal_rate(i, j) * pi[m];
                }
            }
            outflow += u[i][n] + k[i] * model.total_exit_rate({i}) * pi[n];
        }
        out[n] = inflow - outflow;
    }
    return out;
}

/// Max absolute violation of the balance equations.
inline double stationary_residual(const JobModel& model, const ConfigSpace& space,
                                  const std::vector<double>& pi,
                                  const std::vector<std::vector<double>>& u) {
    double worst = 0.0;
    for (double v : stationary_balance(model, space, pi, u)) worst = std::max(worst, std::abs(v));
    return worst;
}

inline LpProblem assemble_lp(const JobModel& model, const ConfigSpace& space, const CostFn& cost,
                             double epsilon) {
    if (!(epsilon >= 0.0)) throw ModelError("epsilon must be nonnegative");
    if (model.num_phases() != space.num_phases()) {
        throw ModelError("job model and configuration space disagree on the number of phases");
    }
    const std::size_t phases = space.num_phases();
    const std::size_t configs = space.size();
    LpProblem p;
    p.layout = {configs, phases};
    const auto nv = static_cast<Eigen::Index>(p.layout.num_vars());
    const auto rows = static_cast<Eigen::Index>(configs + 1 + phases);
    auto col = [](std::size_t v) { return static_cast<Eigen::Index>(v); };

    p.objective = Eigen::VectorXd::Zero(nv);
    p.objective(col(p.layout.phi())) = 1.0;
    p.eq = Eigen::MatrixXd::Zero(rows, nv);
    p.eq_rhs = Eigen::VectorXd::Zero(rows);
    p.fixed_zero.assign(p.layout.num_vars(), false);

    for (std::size_t n = 0; n < configs; ++n) {
        const auto row = static_cast<Eigen::Index>(n);
        const Config& k = space.config_at(n);
        for (std::size_t i = 0; i < phases; ++i) {
            if (const std::size_t m = space.minus(n, i); m != kNoConfig) p.eq(row, col(p.layout.u(i, m))) += 1.0;
            if (const std::size_t m = space.plus(n, i); m != kNoConfig) {
                p.eq(row, col(p.layout.pi(m))) += (k[i] + 1) * model.departure_rate(i);
            }
            for (std::size_t j = 0; j < phases; ++j) {
                if (j == i) continue;
                if (const std::size_t m = space.move(n, j, i); m != kNoConfig) {
                    p.eq(row, col(p.layout.pi(m))) += (k[i] + 1) * model.internal_rate(i, j);
                }
            }
            p.eq(row, col(p.layout.u(i, n))) -= 1.0;
            p.eq(row, col(p.layout.pi(n))) -= k[i] * model.total_exit_rate({i});
        }
        if (space.is_full(n)) {
            for (std::size_t i = 0; i < phases; ++i) p.fixed_zero[p.layout.u(i, n)] = true;
        }
    }

    const auto norm_row = static_cast<Eigen::Index>(configs);
    for (std::size_t n = 0; n < configs; ++n) p.eq(norm_row, col(p.layout.pi(n))) = 1.0;
    p.eq_rhs(norm_row) = 1.0;

    for (std::size_t i = 0; i < phases; ++i) {
        const auto row = static_cast<Eigen::Index>(configs + 1 + i);
        for (std::size_t n = 0; n < configs; ++n) {
            if (!space.is_full(n)) p.eq(row, col(p.layout.u(i, n))) = 1.0;
        }
        p.eq(row, col(p.layout.phi())) = -model.arrival_coeff(i);
    }

    // h'pi <= eps (1 - pi(0))  <=>  h'pi + eps pi(0) <= eps
    p.budget = Eigen::RowVectorXd::Zero(nv);
    for (std::size_t n = 0; n < configs; ++n) p.budget(col(p.layout.pi(n))) = cost(n);
    p.budget(col(p.layout.pi(0))) += epsilon;
    p.budget_rhs = epsilon;
    return p;
}

/// Max violation of every constraint of `p` at the point described by `sol`.
inline double constraint_residual(const LpProblem& p, const LpSolution& sol) {
    const LpLayout& lay = p.layout;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.num_vars()));
    x(0) = sol.phi;
    for (std::size_t n = 0; n < lay.num_configs; ++n) {
        x(static_cast<Eigen::Index>(lay.pi(n))) = sol.pi[n];
        for (std::size_t i = 0; i < lay.num_phases; ++i) x(static_cast<Eigen::Index>(lay.u(i, n))) = sol.u[i][n];
    }
    double worst = (p.eq * x - p.eq_rhs).cwiseAbs().maxCoeff();
    worst = std::max(worst, p.budget.dot(x) - p.budget_rhs);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        worst = std::max(worst, -x(j));
        if (p.fixed_zero[static_cast<std::size_t>(j)]) worst = std::max(worst, std::abs(x(j)));
    }
    return worst;
}

/// Solves the LP. A zero optimum means no policy with positive throughput
/// meets the budget, which is reported as LpInfeasible naming the budget row.
inline LpSolution solve_lp(const LpProblem& p, const lp::SimplexOptions& opt = {}) {
    const auto nv = static_cast<Eigen::Index>(p.layout.num_vars());
    const Eigen::Index rows = p.eq.rows() + 1;
    lp::StandardForm sf;
    sf.a = Eigen::MatrixXd::Zero(rows, nv + 1);
    sf.a.topLeftCorner(p.eq.rows(), nv) = p.eq;
    sf.a.block(p.eq.rows(), 0, 1, nv) = p.budget;
    sf.a(p.eq.rows(), nv) = 1.0;  // budget slack
    sf.b = Eigen::VectorXd::Zero(rows);
    sf.b.head(p.eq.rows()) = p.eq_rhs;
    sf.b(p.eq.rows()) = p.budget_rhs;
    sf.c = Eigen::VectorXd::Zero(nv + 1);
    sf.c.head(nv) = p.objective;
    sf.fixed_zero = p.fixed_zero;
    sf.fixed_zero.push_back(false);

    const lp::SimplexResult res = lp::solve(sf, opt);
    const LpLayout& lay = p.layout;
    LpSolution sol;
    sol.iterations = res.iterations;
    double clamped = 0.0;
    auto take = [&](std::size_t v) {
        const double value = res.x(static_cast<Eigen::Index>(v));
        if (value < 0.0) {
            clamped = std::max(clamped, -value);
            return 0.0;
        }
        return value;
    };
    sol.phi = take(lay.phi());
    sol.pi.resize(lay.num_configs);
    sol.u.assign(lay.num_phases, std::vector<double>(lay.num_configs, 0.0));
    for (std::size_t n = 0; n < lay.num_configs; ++n) {
        sol.pi[n] = take(lay.pi(n));
        for (std::size_t i = 0; i < lay.num_phases; ++i) {
            sol.u[i][n] = p.fixed_zero[lay.u(i, n)] ? 0.0 : take(lay.u(i, n));
        }
    }
    sol.residual = constraint_residual(p, sol) + clamped;
    if (sol.phi <= opt.feasibility_tol) {
        throw LpInfeasible(
            "budget row h'pi <= epsilon (1 - pi(0)) admits no policy with positive throughput");
    }
    return sol;
}

/// Single-server LP value scaled to the arrival level r: r / phi*.
inline double nbar_star(double phi_star, double r) {
    if (!(phi_star > 0.0)) throw DegeneratePolicy("optimal throughput factor is not positive");
    return r / phi_star;
}

}  // namespace sbp

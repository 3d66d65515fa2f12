#pragma once

#include <sbp/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace sbp::lp {

/// maximize c'x  subject to  A x = b,  x >= 0,  x_j = 0 for every j with fixed_zero[j].
struct StandardForm {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    std::vector<bool> fixed_zero;
};

struct SimplexOptions {
    double pivot_tol = 1e-10;
    double feasibility_tol = 1e-9;
    double optimality_tol = 1e-9;
    std::size_t refactor_every = 64;
    std::size_t max_iterations = 200'000;
};

struct SimplexResult {
    Eigen::VectorXd x;
    double objective = 0.0;
    std::size_t iterations = 0;
};

namespace detail {

// Revised simplex with an explicit dense basis inverse. Columns with
// index >= num_structural are artificial; `allow_artificial` controls
// whether they may enter the basis.
class RevisedSimplex {
public:
    RevisedSimplex(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, std::vector<bool> blocked,
                   const SimplexOptions& opt)
        : a_(a), b_(b), blocked_(std::move(blocked)), opt_(opt) {}

    void set_basis(std::vector<Eigen::Index> basis) {
        basis_ = std::move(basis);
        refactor();
    }

    // Runs Bland-rule iterations on objective c until optimal.
    // Returns false if the problem is unbounded in c.
    bool optimize(const Eigen::VectorXd& c) {
        const Eigen::Index m = a_.rows();
        const Eigen::Index n = a_.cols();
        std::vector<bool> in_basis(static_cast<std::size_t>(n), false);
        for (auto j : basis_) in_basis[static_cast<std::size_t>(j)] = true;

        while (true) {
            if (iterations_ >= opt_.max_iterations) {
                throw Error("simplex iteration limit reached (" + std::to_string(iterations_) + ")");
            }
            Eigen::VectorXd cb(m);
            for (Eigen::Index r = 0; r < m; ++r) cb(r) = c(basis_[static_cast<std::size_t>(r)]);
            const Eigen::RowVectorXd y = cb.transpose() * binv_;

            Eigen::Index entering = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                const auto ju = static_cast<std::size_t>(j);
                if (in_basis[ju] || blocked_[ju]) continue;
                const double reduced = c(j) - y.dot(a_.col(j));
                if (reduced > opt_.optimality_tol) {
                    entering = j;
                    break;
                }
            }
            if (entering < 0) return true;

            const Eigen::VectorXd dir = binv_ * a_.col(entering);
            Eigen::Index leave_row = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < m; ++r) {
                if (dir(r) <= opt_.pivot_tol) continue;
                const double ratio = std::max(xb_(r), 0.0) / dir(r);
                const bool tie = leave_row >= 0 && std::abs(ratio - best) <= 1e-12 * (1.0 + best);
                if (ratio < best && !tie) {
                    best = ratio;
                    leave_row = r;
                } else if (tie && basis_[static_cast<std::size_t>(r)] <
                                      basis_[static_cast<std::size_t>(leave_row)]) {
                    leave_row = r;
                }
            }
            if (leave_row < 0) return false;

            in_basis[static_cast<std::size_t>(basis_[static_cast<std::size_t>(leave_row)])] = false;
            in_basis[static_cast<std::size_t>(entering)] = true;
            pivot(leave_row, entering, dir);
        }
    }

    // Exchange basic column at `row` for `entering` with precomputed direction.
    void pivot(Eigen::Index row, Eigen::Index entering, const Eigen::VectorXd& dir) {
        const double p = dir(row);
        const double step = xb_(row) / p;
        xb_ -= step * dir;
        xb_(row) = step;
        binv_.row(row) /= p;
        for (Eigen::Index r = 0; r < binv_.rows(); ++r) {
            if (r != row && dir(r) != 0.0) binv_.row(r) -= dir(r) * binv_.row(row);
        }
        basis_[static_cast<std::size_t>(row)] = entering;
        ++iterations_;
        if (iterations_ % opt_.refactor_every == 0) refactor();
    }

    void refactor() {
        const Eigen::Index m = a_.rows();
        Eigen::MatrixXd basis_matrix(m, m);
        for (Eigen::Index r = 0; r < m; ++r) basis_matrix.col(r) = a_.col(basis_[static_cast<std::size_t>(r)]);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix);
        if (!lu.isInvertible()) throw Error("simplex basis became singular");
        binv_ = lu.inverse();
        xb_ = binv_ * b_;
    }

    void block(Eigen::Index j) { blocked_[static_cast<std::size_t>(j)] = true; }

    [[nodiscard]] const std::vector<Eigen::Index>& basis() const { return basis_; }
    [[nodiscard]] const Eigen::MatrixXd& binv() const { return binv_; }
    [[nodiscard]] const Eigen::VectorXd& xb() const { return xb_; }
    [[nodiscard]] std::size_t iterations() const { return iterations_; }

private:
    const Eigen::MatrixXd& a_;
    const Eigen::VectorXd& b_;
    std::vector<bool> blocked_;
    SimplexOptions opt_;
    std::vector<Eigen::Index> basis_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd xb_;
    std::size_t iterations_ = 0;
};

}  // namespace detail

/// Two-phase dense revised simplex with Bland's anti-cycling rule.
///
/// Phase one starts from an all-artificial basis; leftover artificials at
/// zero are pivoted out where possible, and any that cannot be (redundant
/// rows) stay basic but may never re-enter. Deterministic for a given input.
///
/// Throws LpInfeasible or LpUnbounded.
inline SimplexResult solve(const StandardForm& problem, const SimplexOptions& opt = {}) {
    const Eigen::Index m = problem.a.rows();
    const Eigen::Index n = problem.a.cols();
    if (problem.b.size() != m || problem.c.size() != n ||
        problem.fixed_zero.size() != static_cast<std::size_t>(n)) {
        throw Error("simplex: inconsistent problem dimensions");
    }

    Eigen::MatrixXd a(m, n + m);
    Eigen::VectorXd b = problem.b;
    a.leftCols(n) = problem.a;
    a.rightCols(m).setIdentity();
    for (Eigen::Index r = 0; r < m; ++r) {
        if (b(r) < 0.0) {
            a.row(r).head(n) *= -1.0;
            b(r) = -b(r);
        }
    }

    std::vector<bool> blocked(problem.fixed_zero);
    blocked.resize(static_cast<std::size_t>(n + m), false);
    detail::RevisedSimplex simplex(a, b, blocked, opt);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) basis[static_cast<std::size_t>(r)] = n + r;
    simplex.set_basis(basis);

    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
    phase1.tail(m).setConstant(-1.0);
    simplex.optimize(phase1);

    double infeasibility = 0.0;
    for (Eigen::Index r = 0; r < m; ++r) {
        if (simplex.basis()[static_cast<std::size_t>(r)] >= n) infeasibility += std::max(simplex.xb()(r), 0.0);
    }
    if (infeasibility > opt.feasibility_tol) {
        throw LpInfeasible("no point satisfies the constraints (phase-one residual " +
                           std::to_string(infeasibility) + ")");
    }

    for (Eigen::Index j = n; j < n + m; ++j) simplex.block(j);
    for (Eigen::Index r = 0; r < m; ++r) {
        if (simplex.basis()[static_cast<std::size_t>(r)] < n) continue;
        const Eigen::RowVectorXd row = simplex.binv().row(r) * a.leftCols(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            if (problem.fixed_zero[static_cast<std::size_t>(j)]) continue;
            bool basic = false;
            for (auto bj : simplex.basis()) basic = basic || bj == j;
            if (!basic && std::abs(row(j)) > 1e-7) {
                simplex.pivot(r, j, simplex.binv() * a.col(j));
                break;
            }
        }
    }

    Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
    phase2.head(n) = problem.c;
    if (!simplex.optimize(phase2)) throw LpUnbounded("objective is unbounded above");
    simplex.refactor();

    SimplexResult result;
    result.x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index r = 0; r < m; ++r) {
        const Eigen::Index j = simplex.basis()[static_cast<std::size_t>(r)];
        if (j < n) result.x(j) = simplex.xb()(r);
    }
    result.objective = problem.c.dot(result.x);
    result.iterations = simplex.iterations();
    return result;
}

}  // namespace sbp::lp

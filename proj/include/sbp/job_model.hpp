#pragma once

#include <sbp/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace sbp {

/// Index of a job phase. Strong type so it cannot be confused with a
/// configuration ordinal or a server index.
struct PhaseId {
    std::size_t index = 0;

    friend bool operator==(PhaseId, PhaseId) = default;
};

/// Phase-transition CTMC of a single job plus per-type arrival coefficients.
///
/// A job of type i enters service in phase i, moves between phases with rates
/// `internal_rate(i, i')` and leaves from phase i with rate `departure_rate(i)`.
/// Type-i jobs arrive as a Poisson process of rate `arrival_coeff(i) * r`.
class JobModel {
public:
    JobModel(std::vector<std::vector<double>> internal_rates,
             std::vector<double> departure_rates,
             std::vector<double> arrival_coeffs)
        : internal_(std::move(internal_rates))
        , departure_(std::move(departure_rates))
        , lambda_(std::move(arrival_coeffs)) {
        for (std::size_t i = 0; i < internal_.size(); ++i) {
            if (i < internal_[i].size()) internal_[i][i] = 0.0;
        }
        validate();
    }

    /// Single-phase model with exponential service.
    static JobModel exponential(double departure_rate, double arrival_coeff) {
        return JobModel({{0.0}}, {departure_rate}, {arrival_coeff});
    }

    [[nodiscard]] std::size_t num_phases() const noexcept { return departure_.size(); }
    [[nodiscard]] double internal_rate(std::size_t from, std::size_t to) const {
        return internal_[from][to];
    }
    [[nodiscard]] double departure_rate(std::size_t phase) const { return departure_[phase]; }
    [[nodiscard]] double arrival_coeff(std::size_t phase) const { return lambda_[phase]; }
    [[nodiscard]] const std::vector<double>& arrival_coeffs() const noexcept { return lambda_; }
    [[nodiscard]] const std::vector<double>& departure_rates() const noexcept { return departure_; }
    [[nodiscard]] const std::vector<std::vector<double>>& internal_rates() const noexcept {
        return internal_;
    }

    /// mu_{i,bot} + sum_{i' != i} mu_{i i'}
    [[nodiscard]] double total_exit_rate(PhaseId phase) const {
        double total = departure_[phase.index];
        for (std::size_t j = 0; j < num_phases(); ++j) {
            if (j != phase.index) total += internal_[phase.index][j];
        }
        return total;
    }

    [[nodiscard]] double max_exit_rate() const {
        double m = 0.0;
        for (std::size_t i = 0; i < num_phases(); ++i) m = std::max(m, total_exit_rate({i}));
        return m;
    }

    /// Expected time until departure, starting from each phase.
    ///
    /// Solves (mu_{i,bot} + sum_{i'} mu_{ii'}) t_i = 1 + sum_{i'} mu_{ii'} t_{i'}.
    [[nodiscard]] std::vector<double> expected_remaining_times() const {
        return first_passage(std::vector<double>(num_phases(), 1.0), true);
    }

    /// Expected number of phase jumps (internal transitions plus the final
    /// departure) a job makes when it starts in each phase.
    [[nodiscard]] std::vector<double> expected_jump_counts() const {
        return first_passage(std::vector<double>(num_phases(), 1.0), false);
    }

private:
    void validate() const {
        const std::size_t n = departure_.size();
        if (n == 0) throw ModelError("job model needs at least one phase");
        if (internal_.size() != n || lambda_.size() != n) {
            throw ModelError("job model arrays disagree on the number of phases");
        }
        auto check = [](double v, const std::string& what) {
            if (!std::isfinite(v)) throw ModelError(what + " is not finite");
            if (v < 0.0) throw ModelError("NegativeRate: " + what + " is negative");
        };
        bool any_arrival = false;
        for (std::size_t i = 0; i < n; ++i) {
            if (internal_[i].size() != n) throw ModelError("internal_rates must be square");
            for (std::size_t j = 0; j < n; ++j) {
                check(internal_[i][j], "internal rate [" + std::to_string(i) + "][" +
                                           std::to_string(j) + "]");
            }
            check(departure_[i], "departure rate [" + std::to_string(i) + "]");
            check(lambda_[i], "arrival coefficient [" + std::to_string(i) + "]");
            any_arrival = any_arrival || lambda_[i] > 0.0;
        }

        // Backward search from the absorbing state over positive-rate edges.
        std::vector<bool> reaches(n, false);
        std::vector<std::size_t> stack;
        for (std::size_t i = 0; i < n; ++i) {
            if (departure_[i] > 0.0) {
                reaches[i] = true;
                stack.push_back(i);
            }
        }
        while (!stack.empty()) {
            const std::size_t to = stack.back();
            stack.pop_back();
            for (std::size_t from = 0; from < n; ++from) {
                if (!reaches[from] && from != to && internal_[from][to] > 0.0) {
                    reaches[from] = true;
                    stack.push_back(from);
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!reaches[i]) throw AbsorptionUnreachable(i);
        }
        if (!any_arrival) throw ModelError("NoArrivals: every arrival coefficient is zero");
    }

    // Solves  D x = source + M x  where D is the total exit rate. With
    // time_weighted=false the system is scaled to jump probabilities, so
    // x counts jumps instead of time.
    [[nodiscard]] std::vector<double> first_passage(const std::vector<double>& source,
                                                    bool time_weighted) const {
        const auto n = static_cast<Eigen::Index>(num_phases());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        Eigen::VectorXd b(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto iu = static_cast<std::size_t>(i);
            const double exit = total_exit_rate({iu});
            const double scale = time_weighted ? 1.0 : exit;
            a(i, i) = exit / scale;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (j != i) a(i, j) -= internal_[iu][static_cast<std::size_t>(j)] / scale;
            }
            b(i) = source[iu];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible()) throw SingularSystem("first-passage system is singular");
        const Eigen::VectorXd x = lu.solve(b);
        return {x.data(), x.data() + n};
    }

    std::vector<std::vector<double>> internal_;
    std::vector<double> departure_;
    std::vector<double> lambda_;
};

}  // namespace sbp

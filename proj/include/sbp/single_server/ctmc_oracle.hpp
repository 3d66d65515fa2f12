#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/single_server/decomposition.hpp>
#include <sbp/single_server/dynamics.hpp>
#include <sbp/single_server/policy.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace sbp::single_server {

struct OracleResult {
    std::vector<double> pi;                 // over all of K; zero outside the class and on impulse states
    std::vector<double> request_rates;      // phi_i
    std::vector<std::vector<double>> u;     // nominal transition frequencies u[phase][config]
    std::optional<double> conditional_cost;  // E[h | K != 0]; empty when the server is never busy
};

/// Nominal single-job steps that make up a jump from `from` to the larger
/// configuration `to`: phases are filled in index order.
inline void nominal_steps(const ConfigSpace& s, std::size_t from, std::size_t to, double weight,
                          std::vector<std::vector<double>>& u) {
    const Config& target = s.config_at(to);
    std::size_t here = from;
    for (std::size_t i = 0; i < s.num_phases(); ++i) {
        while (s.config_at(here)[i] < target[i]) {
            u[i][here] += weight;
            here = s.plus(here, i);
        }
    }
}

/// Exact stationary behaviour of `policy` restricted to one recurrent class.
///
/// Impulse states are folded into instantaneous branch distributions, so the
/// generator lives on the class's resting states only. `members` must be
/// closed under the collapsed dynamics.
inline OracleResult ctmc_oracle(const SingleServerPolicy& policy, const JobModel& model,
                                const ConfigSet& members, const CostFn* cost = nullptr) {
    const ConfigSpace& s = policy.space();
    const std::size_t phases = s.num_phases();
    std::vector<std::size_t> local(s.size(), kNoConfig);
    std::vector<std::size_t> resting;
    for (std::size_t n : members) {
        if (n >= s.size()) throw ModelError("class member outside the configuration space");
        if (!policy.is_impulse(n)) {
            local[n] = resting.size();
            resting.push_back(n);
        }
    }
    if (resting.empty()) throw ModelError("class has no resting configuration");

    const auto m = static_cast<Eigen::Index>(resting.size());
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(m, m);
    std::vector<std::vector<CollapsedJump>> jumps(resting.size());
    for (std::size_t a = 0; a < resting.size(); ++a) {
        jumps[a] = collapsed_jumps(policy, model, resting[a]);
        for (const auto& j : jumps[a]) {
            if (local[j.terminal] == kNoConfig) throw ModelError("class is not closed under the policy dynamics");
            const auto from = static_cast<Eigen::Index>(a);
            const auto to = static_cast<Eigen::Index>(local[j.terminal]);
            if (from == to) continue;
            q(from, to) += j.rate;
            q(from, from) -= j.rate;
        }
    }

    // pi Q = 0 with the last balance equation replaced by normalization
    Eigen::MatrixXd sys = q.transpose();
    sys.row(m - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs(m - 1) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(sys);
    if (lu.rank() < m) throw SingularSystem("collapsed generator of the class is reducible");
    const Eigen::VectorXd x = lu.solve(rhs);

    OracleResult out;
    out.pi.assign(s.size(), 0.0);
    out.request_rates.assign(phases, 0.0);
    out.u.assign(phases, std::vector<double>(s.size(), 0.0));
    for (std::size_t a = 0; a < resting.size(); ++a) out.pi[resting[a]] = x(static_cast<Eigen::Index>(a));

    std::vector<double> inflow(s.size(), 0.0);  // rate of landings on impulse states
    for (std::size_t a = 0; a < resting.size(); ++a) {
        const std::size_t n = resting[a];
        const double p = out.pi[n];
        for (const auto& j : jumps[a]) {
            for (std::size_t i = 0; i < phases; ++i) out.request_rates[i] += p * j.rate * j.requests[i];
        }
        for (const RawEvent& ev : raw_events(policy, model, n)) {
            if (ev.kind == RawEvent::Kind::Request) out.u[ev.to_phase][n] += p * ev.rate;
            if (ev.kind == RawEvent::Kind::Escape) nominal_steps(s, n, ev.landing, p * ev.rate, out.u);
            if (policy.is_impulse(ev.landing)) inflow[ev.landing] += p * ev.rate;
        }
    }
    // impulse successors have larger totals, hence larger ordinals
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (!(inflow[n] > 0.0) || !policy.is_impulse(n)) continue;
        const auto& probs = std::get<Impulse>(policy.action(n)).probs;
        for (std::size_t i = 0; i < phases; ++i) {
            if (!(probs[i] > 0.0)) continue;
            const double f = inflow[n] * probs[i];
            out.u[i][n] += f;
            const std::size_t next = s.plus(n, i);
            if (policy.is_impulse(next)) inflow[next] += f;
        }
    }

    if (cost != nullptr) {
        const double busy = 1.0 - out.pi[0];
        if (busy > 1e-12) {
            double h = 0.0;
            for (std::size_t n = 0; n < s.size(); ++n) h += (*cost)(n) * out.pi[n];
            out.conditional_cost = h / busy;
        }
    }
    return out;
}

/// Total variation distance between two distributions on the same index set.
[[nodiscard]] inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) d += std::abs(a[n] - b[n]);
    return 0.5 * d;
}

}  // namespace sbp::single_server

#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/lp_core.hpp>

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace sbp::single_server {

/// Per-phase exponential request timers, rate u_i(k) / pi(k).
struct Proactive {
    std::vector<double> rates;
};

/// Immediate request of one job, type drawn with probability u_i(k) / sum u(k).
struct Impulse {
    std::vector<double> probs;
};

struct Quiet {};

/// Exponential timer that adds the whole configuration `target` at once.
/// Only used by the per-class policies of a decomposition, at the empty
/// configuration when it lies outside the class.
struct Escape {
    double rate = 1.0;
    std::size_t target = 0;
};

using PolicyAction = std::variant<Proactive, Impulse, Quiet, Escape>;

/// One possible result of following impulse requests from a configuration:
/// where the server comes to rest and how many jobs of each type it requested.
struct ChainOutcome {
    std::size_t terminal = 0;
    std::vector<int> requests;
    double prob = 1.0;
};

class SingleServerPolicy {
public:
    static constexpr double kDefaultZeroThreshold = 1e-9;

    SingleServerPolicy(const ConfigSpace& space, std::vector<PolicyAction> actions,
                       double zero_threshold = kDefaultZeroThreshold)
        : space_(&space), actions_(std::move(actions)), zero_threshold_(zero_threshold) {
        if (actions_.size() != space.size()) throw ModelError("policy needs one action per configuration");
        validate();
        outcomes_.resize(space.size());
        for (std::size_t n = space.size(); n-- > 0;) outcomes_[n] = resolve_uncached(n);
    }

    [[nodiscard]] const ConfigSpace& space() const noexcept { return *space_; }
    [[nodiscard]] const PolicyAction& action(std::size_t n) const { return actions_[n]; }
    [[nodiscard]] const std::vector<PolicyAction>& actions() const noexcept { return actions_; }
    [[nodiscard]] double zero_threshold() const noexcept { return zero_threshold_; }
    [[nodiscard]] bool is_impulse(std::size_t n) const {
        return std::holds_alternative<Impulse>(actions_[n]);
    }

    /// Rest distribution after arriving at configuration n: n itself unless
    /// n is an impulse state, in which case every terminal of the chain.
    [[nodiscard]] const std::vector<ChainOutcome>& resolve(std::size_t n) const { return outcomes_[n]; }

    /// Total rate of timer-driven requests at n (proactive or escape).
    [[nodiscard]] double timer_rate(std::size_t n) const {
        if (const auto* p = std::get_if<Proactive>(&actions_[n])) {
            double s = 0.0;
            for (double r : p->rates) s += r;
            return s;
        }
        if (const auto* e = std::get_if<Escape>(&actions_[n])) return e->rate;
        return 0.0;
    }

private:
    void validate() const {
        const ConfigSpace& s = *space_;
        for (std::size_t n = 0; n < s.size(); ++n) {
            const PolicyAction& a = actions_[n];
            if (const auto* p = std::get_if<Proactive>(&a)) {
                if (p->rates.size() != s.num_phases()) throw ModelError("proactive rates need one entry per phase");
                for (std::size_t i = 0; i < p->rates.size(); ++i) {
                    if (!(p->rates[i] >= 0.0) || !std::isfinite(p->rates[i])) {
                        throw ModelError("proactive rate must be finite and nonnegative");
                    }
                    if (p->rates[i] > 0.0 && s.plus(n, i) == kNoConfig) {
                        throw ModelError("policy requests a job at a full configuration");
                    }
                }
            } else if (const auto* im = std::get_if<Impulse>(&a)) {
                double sum = 0.0;
                for (std::size_t i = 0; i < im->probs.size(); ++i) {
                    if (!(im->probs[i] >= 0.0)) throw ModelError("impulse probabilities must be nonnegative");
                    if (im->probs[i] > 0.0 && s.plus(n, i) == kNoConfig) {
                        throw ModelError("policy requests a job at a full configuration");
                    }
                    sum += im->probs[i];
                }
                if (im->probs.size() != s.num_phases() || std::abs(sum - 1.0) > 1e-12) {
                    throw ModelError("impulse probabilities must sum to one");
                }
            } else if (const auto* e = std::get_if<Escape>(&a)) {
                if (e->target >= s.size() || !(e->rate > 0.0)) throw ModelError("invalid escape action");
            }
        }
        // Impulse chains: depth-first search for a cycle among impulse states.
        std::vector<int> colour(s.size(), 0);
        std::vector<std::pair<std::size_t, std::size_t>> stack;
        for (std::size_t root = 0; root < s.size(); ++root) {
            if (colour[root] != 0 || !is_impulse(root)) continue;
            stack.emplace_back(root, 0);
            colour[root] = 1;
            while (!stack.empty()) {
                auto& [n, next] = stack.back();
                const auto& probs = std::get<Impulse>(actions_[n]).probs;
                if (next == probs.size()) {
                    colour[n] = 2;
                    stack.pop_back();
                    continue;
                }
                const std::size_t i = next++;
                if (probs[i] <= 0.0) continue;
                const std::size_t m = s.plus(n, i);
                if (!is_impulse(m)) continue;
                if (colour[m] == 1) {
                    throw ImpulseCycle("impulse requests revisit configuration " + std::to_string(m));
                }
                if (colour[m] == 0) {
                    colour[m] = 1;
                    stack.emplace_back(m, 0);
                }
            }
        }
    }

    // Impulse targets always have more jobs, so processing ordinals in
    // descending order (totals descending) sees every successor first.
    [[nodiscard]] std::vector<ChainOutcome> resolve_uncached(std::size_t n) const {
        const std::size_t phases = space_->num_phases();
        if (!is_impulse(n)) return {ChainOutcome{n, std::vector<int>(phases, 0), 1.0}};
        std::map<std::pair<std::size_t, std::vector<int>>, double> merged;
        const auto& probs = std::get<Impulse>(actions_[n]).probs;
        for (std::size_t i = 0; i < phases; ++i) {
            if (probs[i] <= 0.0) continue;
            for (const auto& o : outcomes_[space_->plus(n, i)]) {
                auto req = o.requests;
                ++req[i];
                merged[{o.terminal, req}] += probs[i] * o.prob;
            }
        }
        std::vector<ChainOutcome> out;
        for (const auto& [key, p] : merged) out.push_back({key.first, key.second, p});
        return out;
    }

    const ConfigSpace* space_;
    std::vector<PolicyAction> actions_;
    double zero_threshold_;
    std::vector<std::vector<ChainOutcome>> outcomes_;
};

/// LP-based policy: proactive timers where pi(k) > 0, impulse requests where
/// pi(k) = 0 but requests flow through k, quiet otherwise. Full
/// configurations are always quiet. Entries at or below the zero threshold
/// count as zero in both pi and u.
inline SingleServerPolicy build_policy(const ConfigSpace& space, const std::vector<double>& pi,
                                       const std::vector<std::vector<double>>& u,
                                       double zero_threshold = SingleServerPolicy::kDefaultZeroThreshold) {
    const std::size_t phases = space.num_phases();
    auto clean = [&](double v) { return v > zero_threshold ? v : 0.0; };  // round-off is not a request
    std::vector<PolicyAction> actions(space.size());
    for (std::size_t n = 0; n < space.size(); ++n) {
        if (space.is_full(n)) {
            actions[n] = Quiet{};
            continue;
        }
        double total = 0.0;
        for (std::size_t i = 0; i < phases; ++i) total += clean(u[i][n]);
        if (pi[n] > zero_threshold) {
            Proactive p{std::vector<double>(phases, 0.0)};
            for (std::size_t i = 0; i < phases; ++i) p.rates[i] = clean(u[i][n]) / pi[n];
            actions[n] = std::move(p);
        } else if (total > 0.0) {
            Impulse im{std::vector<double>(phases, 0.0)};
            for (std::size_t i = 0; i < phases; ++i) im.probs[i] = clean(u[i][n]) / total;
            actions[n] = std::move(im);
        } else {
            actions[n] = Quiet{};
        }
    }
    return SingleServerPolicy(space, std::move(actions), zero_threshold);
}

inline SingleServerPolicy build_policy(const LpSolution& sol, const ConfigSpace& space,
                                       double zero_threshold = SingleServerPolicy::kDefaultZeroThreshold) {
    return build_policy(space, sol.pi, sol.u, zero_threshold);
}

}  // namespace sbp::single_server

#pragma once

#include <sbp/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace sbp {

/// Number of jobs per phase on one server.
using Config = std::vector<int>;

inline constexpr std::size_t kNoConfig = static_cast<std::size_t>(-1);

/// All server configurations with at most `kmax` jobs, in canonical order:
/// ascending total job count, ties broken by descending lexicographic order
/// on the counts, e.g. (0,0),(1,0),(0,1),(2,0),(1,1),(0,2).
///
/// Besides the ordinal map the space precomputes neighbour tables so the
/// simulators can move between configurations without hashing.
class ConfigSpace {
public:
    static constexpr std::size_t kDefaultCap = 1'000'000;

    ConfigSpace(std::size_t num_phases, int kmax, std::size_t cap = kDefaultCap)
        : phases_(num_phases), kmax_(kmax) {
        if (num_phases < 1) throw ModelError("config space needs at least one phase");
        if (kmax < 1) throw ModelError("kmax must be at least 1");
        const double count = binomial(static_cast<double>(kmax) + static_cast<double>(num_phases),
                                      static_cast<double>(num_phases));
        if (count > static_cast<double>(cap)) {
            throw SizeOverflow("configuration space has " + std::to_string(count) +
                               " entries, cap is " + std::to_string(cap));
        }
        Config current(phases_, 0);
        for (int total = 0; total <= kmax_; ++total) fill(current, 0, total);

        index_.reserve(configs_.size());
        for (std::size_t n = 0; n < configs_.size(); ++n) index_.emplace(encode(configs_[n]), n);

        plus_.assign(configs_.size() * phases_, kNoConfig);
        minus_.assign(configs_.size() * phases_, kNoConfig);
        for (std::size_t n = 0; n < configs_.size(); ++n) {
            for (std::size_t i = 0; i < phases_; ++i) {
                Config k = configs_[n];
                ++k[i];
                plus_[n * phases_ + i] = index_of(k);
                k[i] -= 2;
                minus_[n * phases_ + i] = index_of(k);
            }
        }
    }

    [[nodiscard]] std::size_t num_phases() const noexcept { return phases_; }
    [[nodiscard]] int kmax() const noexcept { return kmax_; }
    [[nodiscard]] std::size_t size() const noexcept { return configs_.size(); }
    [[nodiscard]] const Config& config_at(std::size_t n) const { return configs_.at(n); }
    [[nodiscard]] const std::vector<Config>& configs() const noexcept { return configs_; }

    /// Ordinal of `k`, or kNoConfig when `k` is not feasible.
    [[nodiscard]] std::size_t index_of(const Config& k) const {
        if (k.size() != phases_) return kNoConfig;
        int total = 0;
        for (int c : k) {
            if (c < 0) return kNoConfig;
            total += c;
        }
        if (total > kmax_) return kNoConfig;
        const auto it = index_.find(encode(k));
        return it == index_.end() ? kNoConfig : it->second;
    }

    [[nodiscard]] int total(std::size_t n) const {
        int t = 0;
        for (int c : configs_[n]) t += c;
        return t;
    }
    [[nodiscard]] bool is_full(std::size_t n) const { return total(n) == kmax_; }

    /// k + e_i as an ordinal, kNoConfig when infeasible.
    [[nodiscard]] std::size_t plus(std::size_t n, std::size_t phase) const {
        return plus_[n * phases_ + phase];
    }
    /// k - e_i as an ordinal, kNoConfig when k_i == 0.
    [[nodiscard]] std::size_t minus(std::size_t n, std::size_t phase) const {
        return minus_[n * phases_ + phase];
    }
    /// k - e_from + e_to, kNoConfig when k_from == 0.
    [[nodiscard]] std::size_t move(std::size_t n, std::size_t from, std::size_t to) const {
        const std::size_t m = minus(n, from);
        return m == kNoConfig ? kNoConfig : plus(m, to);
    }

    /// k + delta if every count stays nonnegative and the total stays within kmax.
    [[nodiscard]] std::optional<Config> shift(const Config& k, const std::vector<int>& delta) const {
        if (k.size() != phases_ || delta.size() != phases_) return std::nullopt;
        Config out(phases_);
        for (std::size_t i = 0; i < phases_; ++i) out[i] = k[i] + delta[i];
        if (index_of(out) == kNoConfig) return std::nullopt;
        return out;
    }

private:
    static double binomial(double n, double k) {
        return std::round(std::exp(std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1)));
    }

    void fill(Config& current, std::size_t phase, int remaining) {
        if (phase + 1 == phases_) {
            current[phase] = remaining;
            configs_.push_back(current);
            return;
        }
        for (int c = remaining; c >= 0; --c) {
            current[phase] = c;
            fill(current, phase + 1, remaining - c);
        }
        current[phase] = 0;
    }

    [[nodiscard]] std::uint64_t encode(const Config& k) const {
        std::uint64_t code = 0;
        for (int c : k) code = code * static_cast<std::uint64_t>(kmax_ + 1) + static_cast<std::uint64_t>(c);
        return code;
    }

    std::size_t phases_;
    int kmax_;
    std::vector<Config> configs_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
    std::vector<std::size_t> plus_;
    std::vector<std::size_t> minus_;
};

/// Cost rate h(k) materialized over the whole configuration space, with a
/// verified L1-Lipschitz bound.
class CostFn {
public:
    CostFn(const ConfigSpace& space, std::vector<double> table, double lipschitz_bound)
        : table_(std::move(table)), gamma_(lipschitz_bound) {
        if (table_.size() != space.size()) {
            throw ModelError("cost table has " + std::to_string(table_.size()) + " entries, expected " +
                             std::to_string(space.size()));
        }
        for (double v : table_) {
            if (!std::isfinite(v)) throw ModelError("cost table entry is not finite");
        }
        if (table_[0] != 0.0) throw ModelError("cost of the empty configuration must be 0");
        // K is a down-closed lattice simplex, so any two configurations are
        // joined by a monotone path of unit steps inside K whose length is
        // their L1 distance. Checking unit steps is therefore exact.
        constexpr double slack = 1e-12;
        for (std::size_t n = 0; n < space.size(); ++n) {
            for (std::size_t i = 0; i < space.num_phases(); ++i) {
                const std::size_t m = space.plus(n, i);
                if (m == kNoConfig) continue;
                if (std::abs(table_[m] - table_[n]) > gamma_ + slack) {
                    throw ModelError("cost table violates the Lipschitz bound " + std::to_string(gamma_) +
                                     " between configurations " + std::to_string(n) + " and " +
                                     std::to_string(m));
                }
            }
        }
    }

    /// Smallest valid Lipschitz bound for `table`.
    static CostFn from_table(const ConfigSpace& space, std::vector<double> table) {
        double gamma = 0.0;
        if (table.size() == space.size()) {
            for (std::size_t n = 0; n < space.size(); ++n) {
                for (std::size_t i = 0; i < space.num_phases(); ++i) {
                    const std::size_t m = space.plus(n, i);
                    if (m != kNoConfig) gamma = std::max(gamma, std::abs(table[m] - table[n]));
                }
            }
        }
        return CostFn(space, std::move(table), gamma);
    }

    static CostFn zero(const ConfigSpace& space) {
        return CostFn(space, std::vector<double>(space.size(), 0.0), 0.0);
    }

    /// h(k) = sum over resources of (sum_i w[res][i] k_i - cap[res])^+.
    /// `weights[res]` holds the per-phase requirement of resource `res`.
    static CostFn overcommit(const ConfigSpace& space, const std::vector<std::vector<double>>& weights,
                             const std::vector<double>& capacity) {
        if (weights.size() != capacity.size()) {
            throw ModelError("overcommit cost needs one weight row per capacity entry");
        }
        std::vector<double> phase_sum(space.num_phases(), 0.0);
        for (const auto& row : weights) {
            if (row.size() != space.num_phases()) {
                throw ModelError("overcommit weight rows need one entry per phase");
            }
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!(row[i] >= 0.0) || !std::isfinite(row[i])) {
                    throw ModelError("NegativeWeight in overcommit cost");
                }
                phase_sum[i] += row[i];
            }
        }
        const double gamma = *std::max_element(phase_sum.begin(), phase_sum.end());
        std::vector<double> table(space.size(), 0.0);
        for (std::size_t n = 0; n < space.size(); ++n) {
            const Config& k = space.config_at(n);
            for (std::size_t res = 0; res < capacity.size(); ++res) {
                double load = 0.0;
                for (std::size_t i = 0; i < k.size(); ++i) load += weights[res][i] * k[i];
                table[n] += std::max(0.0, load - capacity[res]);
            }
        }
        return CostFn(space, std::move(table), gamma);
    }

    [[nodiscard]] double operator()(std::size_t n) const { return table_[n]; }
    [[nodiscard]] const std::vector<double>& table() const noexcept { return table_; }
    [[nodiscard]] double lipschitz_bound() const noexcept { return gamma_; }

private:
    std::vector<double> table_;
    double gamma_;
};

}  // namespace sbp

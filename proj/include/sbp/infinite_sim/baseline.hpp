#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/metrics.hpp>
#include <sbp/rng.hpp>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <set>
#include <string>
#include <vector>

namespace sbp::infinite_sim {

/// Placement rule applied at each arrival; jobs are never moved afterwards.
enum class BaselineStrategy {
    NewServerAlways,  // every job opens the lowest-index idle server
    FirstFit,         // lowest-index active server with room, else a new server
    LeastCost,        // active server with the smallest cost increase; a new server when every increase is positive
};

[[nodiscard]] inline BaselineStrategy parse_baseline(const std::string& name) {
    if (name == "new-server-always") return BaselineStrategy::NewServerAlways;
    if (name == "first-fit") return BaselineStrategy::FirstFit;
    if (name == "least-cost") return BaselineStrategy::LeastCost;
    throw ModelError("unknown baseline strategy '" + name + "'");
}

[[nodiscard]] inline std::string to_string(BaselineStrategy s) {
    switch (s) {
        case BaselineStrategy::NewServerAlways: return "new-server-always";
        case BaselineStrategy::FirstFit: return "first-fit";
        case BaselineStrategy::LeastCost: return "least-cost";
    }
    return "unknown";
}

/// Greedy dispatcher over an unbounded server list, for comparison with JRS.
class BaselineWorld {
public:
    BaselineWorld(const JobModel& model, const ConfigSpace& space, const CostFn& cost, double r,
                  BaselineStrategy strategy, std::uint64_t seed, std::uint64_t replication = 0,
                  std::size_t batches = 20)
        : model_(&model), space_(&space), cost_(&cost), strategy_(strategy), batches_(batches),
          rng_(derive_seed(seed, replication, 0, Stream::Baseline)) {
        if (!(r > 0.0)) throw ModelError("arrival scale r must be positive");
        const std::size_t phases = space.num_phases();
        for (std::size_t i = 0; i < phases; ++i) arrival_rates_.push_back(model.arrival_coeff(i) * r);
        for (double a : arrival_rates_) total_arrival_ += a;
        job_rate_.assign(space.size(), 0.0);
        for (std::size_t n = 0; n < space.size(); ++n) {
            const Config& k = space.config_at(n);
            for (std::size_t i = 0; i < phases; ++i) job_rate_[n] += k[i] * model.total_exit_rate({i});
        }
        occupancy_.assign(space.size(), 0);
        push_arrival();
    }

    [[nodiscard]] double now() const noexcept { return clock_; }
    [[nodiscard]] std::size_t servers_opened() const noexcept { return config_.size(); }

    metrics::MetricsAccumulator run(double horizon, double warmup) {
        if (!(horizon >= warmup) || !(warmup >= clock_)) throw ModelError("run needs horizon >= warmup >= now");
        metrics::MetricsAccumulator acc(warmup, horizon, batches_, space_->num_phases(), space_->size());
        if (horizon == warmup) return acc;
        acc_ = &acc;
        while (true) {
            while (stale(queue_.top())) queue_.pop();
            const Event ev = queue_.top();
            if (ev.time >= horizon) break;
            queue_.pop();
            integrate(ev.time);
            clock_ = ev.time;
            if (ev.server == kArrival) on_arrival();
            else on_server(ev.server);
            if (clock_ >= warmup) ++acc.events;
        }
        integrate(horizon);
        clock_ = horizon;
        acc_ = nullptr;
        return acc;
    }

private:
    static constexpr std::size_t kArrival = std::numeric_limits<std::size_t>::max();

    struct Event {
        double time;
        std::uint64_t seq;
        std::size_t server;
        std::uint64_t generation;
        bool operator>(const Event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
    };

    [[nodiscard]] bool stale(const Event& e) const {
        return e.server != kArrival && generation_[e.server] != e.generation;
    }

    void push_arrival() { queue_.push({clock_ + exponential(rng_, total_arrival_), seq_++, kArrival, 0}); }

    void reschedule(std::size_t s) {
        ++generation_[s];
        const double rate = job_rate_[config_[s]];
        if (rate > 0.0) queue_.push({clock_ + exponential(rng_, rate), seq_++, s, generation_[s]});
    }

    void integrate(double t) {
        if (acc_ == nullptr) return;
        const double t0 = std::max(last_, acc_->window_start);
        const double t1 = std::min(t, acc_->window_end);
        last_ = t;
        if (!(t1 > t0)) return;
        acc_->active.add(t0, t1, static_cast<double>(active_));
        acc_->cost.add(t0, t1, cost_total_);
        acc_->real_jobs.add(t0, t1, static_cast<double>(jobs_));
        for (std::size_t n = 1; n < occupancy_.size(); ++n) {
            if (occupancy_[n] != 0) acc_->occupancy[n] += (t1 - t0) * static_cast<double>(occupancy_[n]);
        }
    }

    void set_config(std::size_t s, std::size_t n) {
        const std::size_t before = config_[s];
        if (before != 0) --occupancy_[before];
        if (n != 0) ++occupancy_[n];
        cost_total_ += (*cost_)(n) - (*cost_)(before);
        if (before == 0 && n != 0) {
            ++active_;
            active_set_.insert(s);
        }
        if (before != 0 && n == 0) {
            --active_;
            active_set_.erase(s);
            idle_.push(s);
        }
        config_[s] = n;
    }

    std::size_t open_server() {
        if (!idle_.empty()) {
            const std::size_t s = idle_.top();
            idle_.pop();
            return s;
        }
        config_.push_back(0);
        generation_.push_back(0);
        return config_.size() - 1;
    }

    void on_arrival() {
        double x = uniform01(rng_) * total_arrival_;
        std::size_t type = arrival_rates_.size() - 1;
        for (std::size_t i = 0; i < arrival_rates_.size(); ++i) {
            if (x < arrival_rates_[i]) {
                type = i;
                break;
            }
            x -= arrival_rates_[i];
        }
        std::size_t target = kArrival;
        if (strategy_ == BaselineStrategy::FirstFit) {
            for (std::size_t s : active_set_) {
                if (space_->plus(config_[s], type) != kNoConfig) {
                    target = s;
                    break;
                }
            }
        } else if (strategy_ == BaselineStrategy::LeastCost) {
            double best = 0.0;
            for (std::size_t s : active_set_) {
                const std::size_t next = space_->plus(config_[s], type);
                if (next == kNoConfig) continue;
                const double inc = (*cost_)(next) - (*cost_)(config_[s]);
                if (inc <= best && (target == kArrival || inc < best)) {
                    best = inc;
                    target = s;
                }
            }
        }
        if (target == kArrival) target = open_server();
        set_config(target, space_->plus(config_[target], type));
        ++jobs_;
        reschedule(target);
        push_arrival();
    }

    void on_server(std::size_t s) {
        const Config& k = space_->config_at(config_[s]);
        double x = uniform01(rng_) * job_rate_[config_[s]];
        const std::size_t phases = space_->num_phases();
        for (std::size_t i = 0; i < phases; ++i) {
            if (k[i] == 0) continue;
            for (std::size_t j = 0; j < phases; ++j) {
                if (j == i) continue;
                const double w = k[i] * model_->internal_rate(i, j);
                if (x < w) {
                    set_config(s, space_->move(config_[s], i, j));
                    reschedule(s);
                    return;
                }
                x -= w;
            }
            const double w = k[i] * model_->departure_rate(i);
            if (x < w) {
                set_config(s, space_->minus(config_[s], i));
                --jobs_;
                reschedule(s);
                return;
            }
            x -= w;
        }
        // round-off fell past the last event: treat as the last departure
        for (std::size_t i = phases; i-- > 0;) {
            if (k[i] > 0) {
                set_config(s, space_->minus(config_[s], i));
                --jobs_;
                reschedule(s);
                return;
            }
        }
    }

    const JobModel* model_;
    const ConfigSpace* space_;
    const CostFn* cost_;
    BaselineStrategy strategy_;
    std::size_t batches_;
    Rng rng_;
    std::vector<double> arrival_rates_;
    double total_arrival_ = 0.0;
    std::vector<double> job_rate_;
    std::vector<std::size_t> config_;
    std::vector<std::uint64_t> generation_;
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> idle_;
    std::set<std::size_t> active_set_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    double clock_ = 0.0;
    double last_ = 0.0;
    metrics::MetricsAccumulator* acc_ = nullptr;
    long active_ = 0;
    long jobs_ = 0;
    double cost_total_ = 0.0;
    std::vector<long> occupancy_;
};

/// Runs a baseline dispatcher from an empty system.
inline metrics::MetricsAccumulator run_baseline(const JobModel& model, const ConfigSpace& space, const CostFn& cost,
                                                double r, BaselineStrategy strategy, double horizon, double warmup,
                                                std::uint64_t seed, std::uint64_t replication = 0,
                                                std::size_t batches = 20) {
    BaselineWorld w(model, space, cost, r, strategy, seed, replication, batches);
    return w.run(horizon, warmup);
}

}  // namespace sbp::infinite_sim

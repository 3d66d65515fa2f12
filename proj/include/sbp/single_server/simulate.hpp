#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/metrics.hpp>
#include <sbp/rng.hpp>
#include <sbp/single_server/ctmc_oracle.hpp>
#include <sbp/single_server/dynamics.hpp>
#include <sbp/single_server/policy.hpp>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace sbp::single_server {

struct SingleSimResult {
    std::vector<metrics::Estimate> pi;                 // time fraction per configuration
    std::vector<std::vector<metrics::Estimate>> u;     // nominal transitions per unit time, u[phase][config]
    std::vector<metrics::Estimate> request_rates;      // jobs requested per unit time, per phase
    std::size_t events = 0;                            // events after warmup
};

/// Event-driven simulation of one server under `policy`, started empty.
///
/// Impulse requests are executed one job at a time, each counted as a nominal
/// transition at the configuration it leaves. Statistics cover [warmup, horizon].
inline SingleSimResult simulate_single(const SingleServerPolicy& policy, const JobModel& model, double horizon,
                                       double warmup, std::uint64_t seed, std::size_t batches = 20) {
    if (!(horizon >= warmup) || !(warmup >= 0.0)) throw ModelError("simulation needs horizon >= warmup >= 0");
    const ConfigSpace& s = policy.space();
    const std::size_t phases = s.num_phases();
    SingleSimResult out;
    if (horizon == warmup) {
        out.pi.resize(s.size());
        out.u.assign(phases, std::vector<metrics::Estimate>(s.size()));
        out.request_rates.resize(phases);
        return out;
    }

    using metrics::TimeAverage;
    const TimeAverage blank(warmup, horizon, batches);
    std::vector<TimeAverage> occupancy(s.size(), blank);
    std::vector<std::vector<TimeAverage>> steps(phases, std::vector<TimeAverage>(s.size(), blank));
    std::vector<TimeAverage> requested(phases, blank);

    // per-configuration event menus are fixed, so build them once
    std::vector<std::vector<RawEvent>> menu(s.size());
    std::vector<double> total_rate(s.size(), 0.0);
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (policy.is_impulse(n)) continue;
        menu[n] = raw_events(policy, model, n);
        for (const auto& ev : menu[n]) total_rate[n] += ev.rate;
    }

    Rng rng(derive_seed(seed, 0, 0, Stream::Single));
    double t = 0.0;
    std::size_t state = 0;
    auto nominal = [&](std::size_t phase, std::size_t from) {
        steps[phase][from].count(t);
        requested[phase].count(t);
    };
    auto settle = [&](std::size_t n) {
        while (policy.is_impulse(n)) {
            const auto& probs = std::get<Impulse>(policy.action(n)).probs;
            double x = uniform01(rng);
            std::size_t pick = phases;
            for (std::size_t i = 0; i < phases; ++i) {
                if (!(probs[i] > 0.0)) continue;
                pick = i;
                if (x < probs[i]) break;
                x -= probs[i];
            }
            nominal(pick, n);
            n = s.plus(n, pick);
        }
        return n;
    };
    state = settle(state);

    while (t < horizon) {
        const double rate = total_rate[state];
        const double dt = rate > 0.0 ? exponential(rng, rate) : horizon - t;
        const double next = std::min(t + dt, horizon);
        occupancy[state].add(t, next, 1.0);
        t = next;
        if (t >= horizon) break;
        if (t >= warmup) ++out.events;

        double x = uniform01(rng) * rate;
        const RawEvent* ev = &menu[state].back();
        for (const auto& e : menu[state]) {
            if (x < e.rate) {
                ev = &e;
                break;
            }
            x -= e.rate;
        }
        if (ev->kind == RawEvent::Kind::Request) {
            nominal(ev->to_phase, state);
        } else if (ev->kind == RawEvent::Kind::Escape) {
            const Config& target = s.config_at(ev->landing);
            std::size_t here = state;
            for (std::size_t i = 0; i < phases; ++i) {
                while (s.config_at(here)[i] < target[i]) {
                    nominal(i, here);
                    here = s.plus(here, i);
                }
            }
        }
        state = settle(ev->landing);
    }

    for (std::size_t n = 0; n < s.size(); ++n) out.pi.push_back(occupancy[n].estimate());
    out.u.resize(phases);
    for (std::size_t i = 0; i < phases; ++i) {
        for (std::size_t n = 0; n < s.size(); ++n) out.u[i].push_back(steps[i][n].estimate());
        out.request_rates.push_back(requested[i].estimate());
    }
    return out;
}

}  // namespace sbp::single_server

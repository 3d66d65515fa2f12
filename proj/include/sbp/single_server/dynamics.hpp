#pragma once

#include <sbp/config_space.hpp>
#include <sbp/job_model.hpp>
#include <sbp/single_server/policy.hpp>

#include <cstddef>
#include <vector>

namespace sbp::single_server {

/// A positive-rate event at a configuration, before impulse resolution.
struct RawEvent {
    enum class Kind { Departure, Internal, Request, Escape };
    Kind kind = Kind::Departure;
    double rate = 0.0;
    std::size_t from_phase = 0;
    std::size_t to_phase = 0;  // Internal: destination phase; Request: requested type
    std::size_t landing = 0;   // configuration right after the event
};

/// Every positive-rate event out of configuration n under `policy`.
inline std::vector<RawEvent> raw_events(const SingleServerPolicy& policy, const JobModel& model,
                                        std::size_t n) {
    const ConfigSpace& s = policy.space();
    const Config& k = s.config_at(n);
    std::vector<RawEvent> out;
    for (std::size_t i = 0; i < s.num_phases(); ++i) {
        if (k[i] == 0) continue;
        if (const double r = k[i] * model.departure_rate(i); r > 0.0) {
            out.push_back({RawEvent::Kind::Departure, r, i, i, s.minus(n, i)});
        }
        for (std::size_t j = 0; j < s.num_phases(); ++j) {
            if (j == i) continue;
            if (const double r = k[i] * model.internal_rate(i, j); r > 0.0) {
                out.push_back({RawEvent::Kind::Internal, r, i, j, s.move(n, i, j)});
            }
        }
    }
    if (const auto* p = std::get_if<Proactive>(&policy.action(n))) {
        for (std::size_t i = 0; i < p->rates.size(); ++i) {
            if (p->rates[i] > 0.0) out.push_back({RawEvent::Kind::Request, p->rates[i], i, i, s.plus(n, i)});
        }
    } else if (const auto* e = std::get_if<Escape>(&policy.action(n))) {
        out.push_back({RawEvent::Kind::Escape, e->rate, 0, 0, e->target});
    }
    return out;
}

/// Event with the impulse chain that follows it folded in.
struct CollapsedJump {
    double rate = 0.0;  // event rate times chain-branch probability
    std::size_t terminal = 0;
    std::vector<int> requests;  // jobs requested by the event and its chain
};

inline std::vector<CollapsedJump> collapsed_jumps(const SingleServerPolicy& policy, const JobModel& model,
                                                  std::size_t n) {
    const ConfigSpace& s = policy.space();
    std::vector<CollapsedJump> out;
    for (const RawEvent& ev : raw_events(policy, model, n)) {
        std::vector<int> base(s.num_phases(), 0);
        if (ev.kind == RawEvent::Kind::Request) base[ev.to_phase] = 1;
        if (ev.kind == RawEvent::Kind::Escape) {
            const Config& target = s.config_at(ev.landing);
            const Config& here = s.config_at(n);
            for (std::size_t i = 0; i < base.size(); ++i) base[i] = target[i] - here[i];
        }
        for (const ChainOutcome& o : policy.resolve(ev.landing)) {
            CollapsedJump j{ev.rate * o.prob, o.terminal, base};
            for (std::size_t i = 0; i < base.size(); ++i) j.requests[i] += o.requests[i];
            out.push_back(std::move(j));
        }
    }
    return out;
}

}  // namespace sbp::single_server

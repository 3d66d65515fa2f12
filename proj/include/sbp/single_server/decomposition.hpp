#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/lp_core.hpp>
#include <sbp/single_server/dynamics.hpp>
#include <sbp/single_server/policy.hpp>

#include <algorithm>
#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <vector>

namespace sbp::single_server {

using ConfigSet = std::vector<std::size_t>;  // sorted configuration ordinals

namespace detail {

// Tarjan's algorithm, iterative. Returns component id per node.
inline std::vector<std::size_t> strongly_connected(const std::vector<std::vector<std::size_t>>& adj,
                                                   std::size_t& num_components) {
    const std::size_t n = adj.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::vector<std::pair<std::size_t, std::size_t>> call;
    std::size_t counter = 0;
    num_components = 0;
    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != unvisited) continue;
        call.emplace_back(root, 0);
        while (!call.empty()) {
            auto& [v, edge] = call.back();
            if (edge == 0 && index[v] == unvisited) {
                index[v] = low[v] = counter++;
                stack.push_back(v);
                on_stack[v] = true;
            }
            if (edge < adj[v].size()) {
                const std::size_t w = adj[v][edge++];
                if (index[w] == unvisited) {
                    call.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = false;
                    comp[w] = num_components;
                } while (w != v);
                ++num_components;
            }
            const std::size_t done = v;
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
        }
    }
    return comp;
}

}  // namespace detail

/// Bottom strongly connected components of an explicit directed graph.
inline std::vector<ConfigSet> bottom_components(const std::vector<std::vector<std::size_t>>& adj) {
    std::size_t count = 0;
    const auto comp = detail::strongly_connected(adj, count);
    std::vector<bool> leaks(count, false);
    for (std::size_t v = 0; v < adj.size(); ++v) {
        for (std::size_t w : adj[v]) {
            if (comp[w] != comp[v]) leaks[comp[v]] = true;
        }
    }
    std::vector<ConfigSet> by_comp(count);
    for (std::size_t v = 0; v < adj.size(); ++v) {
        if (!leaks[comp[v]]) by_comp[comp[v]].push_back(v);
    }
    std::vector<ConfigSet> out;
    for (auto& c : by_comp) {
        if (!c.empty()) out.push_back(std::move(c));
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Recurrent classes of the jump chain induced by `policy`.
///
/// The graph runs over non-impulse configurations with an edge for every
/// positive-rate departure, internal transition, timer request or escape,
/// each followed through its impulse chain. Impulse configurations that the
/// chains of a class pass through are reported as members of that class.
inline std::vector<ConfigSet> recurrent_classes(const SingleServerPolicy& policy, const JobModel& model) {
    const ConfigSpace& s = policy.space();
    std::vector<std::vector<std::size_t>> adj(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (policy.is_impulse(n)) continue;
        std::set<std::size_t> targets;
        for (const auto& j : collapsed_jumps(policy, model, n)) {
            if (j.rate > 0.0 && j.terminal != n) targets.insert(j.terminal);
        }
        adj[n].assign(targets.begin(), targets.end());
    }
    std::vector<ConfigSet> classes;
    for (ConfigSet c : bottom_components(adj)) {
        if (c.size() == 1 && policy.is_impulse(c.front())) continue;  // impulse nodes carry no edges
        std::set<std::size_t> members(c.begin(), c.end());
        std::vector<std::size_t> frontier;
        for (std::size_t n : c) {
            for (const RawEvent& ev : raw_events(policy, model, n)) {
                if (policy.is_impulse(ev.landing)) frontier.push_back(ev.landing);
            }
        }
        while (!frontier.empty()) {
            const std::size_t m = frontier.back();
            frontier.pop_back();
            if (!members.insert(m).second) continue;
            const auto& probs = std::get<Impulse>(policy.action(m)).probs;
            for (std::size_t i = 0; i < probs.size(); ++i) {
                if (probs[i] > 0.0 && policy.is_impulse(s.plus(m, i))) frontier.push_back(s.plus(m, i));
            }
        }
        classes.emplace_back(members.begin(), members.end());
    }
    std::sort(classes.begin(), classes.end());
    return classes;
}

/// Split of a reducible policy into one irreducible policy per recurrent
/// class carrying positive stationary mass.
struct RecurrentDecomposition {
    std::vector<ConfigSet> classes;
    std::vector<double> weights;                          // p^j, sums to 1
    std::vector<std::vector<double>> class_pi;            // pi^j over all of K
    std::vector<std::vector<double>> class_request_rates;  // phi_i^j
    std::vector<SingleServerPolicy> policies;              // sigma^j
    std::vector<std::size_t> anchors;                      // k^0 per class
    double mass_off_support = 0.0;
};

/// Policy equal to `policy` on `members`; outside, quiet except at the empty
/// configuration, where a rate-1 timer adds the anchor configuration.
inline SingleServerPolicy restrict_to_class(const SingleServerPolicy& policy, const ConfigSet& members,
                                            std::size_t anchor) {
    const ConfigSpace& s = policy.space();
    std::vector<bool> inside(s.size(), false);
    for (std::size_t n : members) inside[n] = true;
    std::vector<PolicyAction> actions(s.size());
    for (std::size_t n = 0; n < s.size(); ++n) {
        if (inside[n]) actions[n] = policy.action(n);
        else if (n == 0) actions[n] = Escape{1.0, anchor};
        else actions[n] = Quiet{};
    }
    return SingleServerPolicy(s, std::move(actions), policy.zero_threshold());
}

inline RecurrentDecomposition decompose(const SingleServerPolicy& policy, const std::vector<double>& pi,
                                        const std::vector<std::vector<double>>& u, const JobModel& model,
                                        double mass_tolerance = 1e-8) {
    const ConfigSpace& s = policy.space();
    const auto classes = recurrent_classes(policy, model);
    double total_pi = 0.0;
    for (double v : pi) total_pi += v;

    RecurrentDecomposition d;
    double in_classes = 0.0;
    std::vector<double> masses;
    for (const auto& c : classes) {
        double m = 0.0;
        for (std::size_t n : c) m += pi[n];
        masses.push_back(m);
        in_classes += m;
    }
    d.mass_off_support = total_pi - in_classes;
    if (d.mass_off_support > mass_tolerance) {
        throw MassOffRecurrentSupport("stationary mass " + std::to_string(d.mass_off_support) +
                                      " lies outside every recurrent class");
    }
    for (std::size_t j = 0; j < classes.size(); ++j) {
        if (!(masses[j] > mass_tolerance)) continue;
        const ConfigSet& c = classes[j];
        d.classes.push_back(c);
        d.weights.push_back(masses[j] / in_classes);
        std::vector<double> pj(s.size(), 0.0);
        for (std::size_t n : c) pj[n] = pi[n] / masses[j];
        d.class_pi.push_back(std::move(pj));
        std::vector<double> phi(s.num_phases(), 0.0);
        for (std::size_t i = 0; i < s.num_phases(); ++i) {
            for (std::size_t n : c) {
                if (!s.is_full(n)) phi[i] += u[i][n];
            }
            phi[i] /= masses[j];
        }
        d.class_request_rates.push_back(std::move(phi));

        // lexicographically smallest resting (non-impulse) configuration
        std::size_t anchor = kNoConfig;
        for (std::size_t n : c) {
            if (policy.is_impulse(n)) continue;
            if (anchor == kNoConfig || s.config_at(n) < s.config_at(anchor)) anchor = n;
        }
        d.anchors.push_back(anchor);
        d.policies.push_back(restrict_to_class(policy, c, anchor));
    }
    if (d.classes.empty()) throw DegeneratePolicy("no recurrent class carries stationary mass");
    return d;
}

inline RecurrentDecomposition decompose(const SingleServerPolicy& policy, const LpSolution& sol,
                                        const JobModel& model) {
    return decompose(policy, sol.pi, sol.u, model);
}

}  // namespace sbp::single_server

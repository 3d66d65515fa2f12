#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/job_model.hpp>
#include <sbp/metrics.hpp>
#include <sbp/rng.hpp>
#include <sbp/single_server/decomposition.hpp>
#include <sbp/single_server/policy.hpp>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <ostream>
#include <queue>
#include <string>
#include <vector>

namespace sbp::infinite_sim {

using single_server::RecurrentDecomposition;
using single_server::SingleServerPolicy;

/// Normal server: real jobs, virtual jobs and outstanding tokens per phase.
struct NormalServerState {
    std::vector<int> real;
    std::vector<int> virtual_jobs;
    std::vector<int> tokens;
    std::size_t observed = 0;     // ordinal of real + virtual
    std::size_t real_config = 0;  // ordinal of real
    int token_total = 0;
    std::uint64_t generation = 0;  // invalidates stale clock events
};

/// Outstanding tokens of one type in one pool, as a multiset of server indices.
struct TokenPool {
    std::vector<std::uint32_t> holders;

    [[nodiscard]] std::size_t size() const noexcept { return holders.size(); }
    void add(std::uint32_t server) { holders.push_back(server); }
    /// Removes a uniformly chosen token and returns its server.
    std::uint32_t take(Rng& rng) {
        const std::size_t at = uniform_index(rng, holders.size());
        const std::uint32_t s = holders[at];
        holders[at] = holders.back();
        holders.pop_back();
        return s;
    }
};

struct Pool {
    const SingleServerPolicy* policy = nullptr;
    std::size_t eta_max = 0;
    std::vector<NormalServerState> servers;
    std::vector<TokenPool> tokens;  // per type
    std::vector<int> backup_phase;  // -1 when idle
    std::vector<std::uint64_t> backup_generation;
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> idle_backups;
    std::size_t busy_backups = 0;
    Rng token_rng;
    Rng server_rng;
};

enum class EventKind : std::uint8_t { Arrival, NormalClock, BackupClock };

struct EventRecord {
    double time = 0.0;
    const char* kind = "";  // arrival-token, arrival-backup, departure, internal, request, backup-departure, backup-internal
    std::size_t pool = 0;
    std::size_t server = 0;
    std::size_t type = 0;
};

struct SimOptions {
    bool debug = false;             // check every invariant after each event
    std::ostream* trace = nullptr;  // one line per event when set
    std::size_t batches = 20;
};

namespace detail {

struct Pending {
    double time;
    std::uint64_t seq;
    EventKind kind;
    std::uint32_t pool;
    std::uint64_t server;
    std::uint64_t generation;
    bool operator>(const Pending& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

struct JobMove {
    double rate;
    std::size_t from;
    std::size_t to;  // == phases for a departure
};

}  // namespace detail

/// Infinite-server system under Join-Requesting-Server, one server pool per
/// recurrent class of the subroutine.
class SimWorld {
public:
    SimWorld(const JobModel& model, const ConfigSpace& space, const CostFn& cost, const RecurrentDecomposition& dec,
             double r, std::uint64_t seed, std::uint64_t replication = 0, SimOptions options = {})
        : model_(&model), space_(&space), cost_(&cost), options_(options), phases_(space.num_phases()) {
        if (!(r > 0.0)) throw ModelError("arrival scale r must be positive");
        if (dec.classes.empty()) throw DegeneratePolicy("decomposition has no class");
        r_ = r;
        phi_star_ = throughput_factor(dec, model);
        nbar_ = r / phi_star_;
        arrival_rng_ = Rng(derive_seed(seed, replication, 0, Stream::Arrivals));
        routing_rng_ = Rng(derive_seed(seed, replication, 0, Stream::Routing));

        total_arrival_rate_ = 0.0;
        for (std::size_t i = 0; i < phases_; ++i) total_arrival_rate_ += model.arrival_coeff(i) * r;
        routing_.assign(phases_, std::vector<double>(dec.classes.size(), 0.0));
        for (std::size_t i = 0; i < phases_; ++i) {
            double norm = 0.0;
            for (std::size_t j = 0; j < dec.classes.size(); ++j) norm += dec.weights[j] * dec.class_request_rates[j][i];
            for (std::size_t j = 0; j < dec.classes.size(); ++j) {
                routing_[i][j] = norm > 0.0 ? dec.weights[j] * dec.class_request_rates[j][i] / norm
                                            : (j == 0 ? 1.0 : 0.0);
            }
        }

        moves_.resize(space.size());
        job_rate_.assign(space.size(), 0.0);
        for (std::size_t n = 0; n < space.size(); ++n) {
            const Config& k = space.config_at(n);
            for (std::size_t i = 0; i < phases_; ++i) {
                if (k[i] == 0) continue;
                if (model.departure_rate(i) > 0.0) moves_[n].push_back({k[i] * model.departure_rate(i), i, phases_});
                for (std::size_t j = 0; j < phases_; ++j) {
                    if (j != i && model.internal_rate(i, j) > 0.0) {
                        moves_[n].push_back({k[i] * model.internal_rate(i, j), i, j});
                    }
                }
            }
            for (const auto& m : moves_[n]) job_rate_[n] += m.rate;
        }
        unit_config_.resize(phases_);
        for (std::size_t i = 0; i < phases_; ++i) unit_config_[i] = space.plus(0, i);

        for (std::size_t j = 0; j < dec.classes.size(); ++j) {
            Pool p;
            p.policy = &dec.policies[j];
            const auto l = static_cast<std::size_t>(std::ceil(dec.weights[j] * nbar_ - 1e-9));
            p.servers.assign(l, NormalServerState{std::vector<int>(phases_, 0), std::vector<int>(phases_, 0),
                                                  std::vector<int>(phases_, 0), 0, 0, 0, 0});
            p.eta_max = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(l)) - 1e-12));
            p.tokens.resize(phases_);
            p.token_rng = Rng(derive_seed(seed, replication, j, Stream::Tokens));
            p.server_rng = Rng(derive_seed(seed, replication, j, Stream::Servers));
            pools_.push_back(std::move(p));
        }
        occupancy_.assign(space.size(), 0);
        for (auto& p : pools_) occupancy_[0] += static_cast<long>(p.servers.size());

        for (std::size_t j = 0; j < pools_.size(); ++j) {
            for (std::size_t s = 0; s < pools_[j].servers.size(); ++s) resume_.push_back({j, s});
            drain_resumes();
            for (std::size_t s = 0; s < pools_[j].servers.size(); ++s) reschedule(j, s);
        }
        schedule_arrival();
        if (options_.debug) check_invariants();
    }

    SimWorld(const SimWorld&) = delete;
    SimWorld& operator=(const SimWorld&) = delete;

    [[nodiscard]] double now() const noexcept { return clock_; }
    [[nodiscard]] double nbar() const noexcept { return nbar_; }
    [[nodiscard]] double phi_star() const noexcept { return phi_star_; }
    [[nodiscard]] const std::vector<Pool>& pools() const noexcept { return pools_; }
    [[nodiscard]] const std::vector<std::vector<double>>& routing() const noexcept { return routing_; }
    [[nodiscard]] double arrival_rate() const noexcept { return total_arrival_rate_; }
    [[nodiscard]] long real_jobs() const noexcept { return real_total_; }
    [[nodiscard]] std::uint64_t requests_made() const noexcept { return requests_made_; }
    [[nodiscard]] std::uint64_t virtual_arrivals() const noexcept { return virtual_arrivals_; }
    [[nodiscard]] std::uint64_t backup_arrivals() const noexcept { return backup_arrivals_; }

    /// Pops and applies the next event. Metrics are integrated up to its time.
    EventRecord step() {
        detail::Pending ev = queue_.top();
        while (is_stale(ev)) {
            queue_.pop();
            ev = queue_.top();
        }
        queue_.pop();
        integrate(ev.time);
        clock_ = ev.time;
        EventRecord rec;
        rec.time = ev.time;
        rec.pool = ev.pool;
        rec.server = static_cast<std::size_t>(ev.server);
        switch (ev.kind) {
            case EventKind::Arrival: on_arrival(rec); break;
            case EventKind::NormalClock: on_normal_clock(ev.pool, static_cast<std::size_t>(ev.server), rec); break;
            case EventKind::BackupClock: on_backup_clock(ev.pool, static_cast<std::size_t>(ev.server), rec); break;
        }
        if (acc_ != nullptr && clock_ >= acc_->window_start && clock_ <= acc_->window_end) ++acc_->events;
        if (options_.trace != nullptr) {
            *options_.trace << rec.time << ' ' << rec.kind << ' ' << rec.pool << ' ' << rec.server << ' '
                            << rec.type << '\n';
        }
        if (options_.debug) check_invariants(&rec);
        return rec;
    }

    /// Advances to `horizon`, accumulating metrics over [warmup, horizon].
    metrics::MetricsAccumulator run(double horizon, double warmup) {
        if (!(horizon >= warmup) || !(warmup >= clock_)) throw ModelError("run needs horizon >= warmup >= now");
        metrics::MetricsAccumulator acc(warmup, horizon, options_.batches, phases_, space_->size());
        if (horizon == warmup) return acc;
        acc_ = &acc;
        while (next_time() < horizon) step();
        integrate(horizon);
        clock_ = horizon;
        acc_ = nullptr;
        return acc;
    }

    /// Full invariant scan; throws InvariantBreach naming the first violation.
    void check_invariants(const EventRecord* last = nullptr) const {
        auto breach = [&](const std::string& what) {
            std::string where;
            if (last != nullptr) {
                where = " at t=" + std::to_string(last->time) + " event " + std::string(last->kind) + " pool " +
                        std::to_string(last->pool) + " server " + std::to_string(last->server);
            }
            throw InvariantBreach(what + where);
        };
        for (std::size_t j = 0; j < pools_.size(); ++j) {
            const Pool& p = pools_[j];
            std::vector<std::vector<int>> held(p.servers.size(), std::vector<int>(phases_, 0));
            for (std::size_t i = 0; i < phases_; ++i) {
                if (p.tokens[i].size() > p.eta_max) breach("token count exceeds the token limit");
                for (std::uint32_t s : p.tokens[i].holders) ++held[s][i];
            }
            for (std::size_t s = 0; s < p.servers.size(); ++s) {
                const NormalServerState& v = p.servers[s];
                int total = 0, tok = 0;
                Config obs(phases_), real(phases_);
                for (std::size_t i = 0; i < phases_; ++i) {
                    if (v.real[i] < 0 || v.virtual_jobs[i] < 0 || v.tokens[i] < 0) breach("negative job count");
                    if (held[s][i] != v.tokens[i]) breach("token pool disagrees with server tokens");
                    total += v.real[i] + v.virtual_jobs[i] + v.tokens[i];
                    tok += v.tokens[i];
                    obs[i] = v.real[i] + v.virtual_jobs[i];
                    real[i] = v.real[i];
                }
                if (total > space_->kmax()) breach("server holds more than kmax jobs and tokens");
                if (tok != v.token_total) breach("token total out of sync");
                if (space_->index_of(obs) != v.observed || space_->index_of(real) != v.real_config) {
                    breach("configuration index out of sync");
                }
                if (tok == 0 && p.policy->is_impulse(v.observed)) breach("idle request state left unresolved");
            }
            for (std::size_t b = 0; b < p.backup_phase.size(); ++b) {
                if (p.backup_phase[b] >= static_cast<int>(phases_)) breach("backup server in unknown phase");
            }
        }
    }

private:
    static double throughput_factor(const RecurrentDecomposition& dec, const JobModel& model) {
        double best = 0.0, phi = 0.0;
        for (std::size_t i = 0; i < model.num_phases(); ++i) {
            if (model.arrival_coeff(i) <= best) continue;
            best = model.arrival_coeff(i);
            double rate = 0.0;
            for (std::size_t j = 0; j < dec.classes.size(); ++j) rate += dec.weights[j] * dec.class_request_rates[j][i];
            phi = rate / best;
        }
        if (!(phi > 0.0)) throw DegeneratePolicy("subroutine requests no jobs");
        return phi;
    }

    [[nodiscard]] double next_time() {
        while (is_stale(queue_.top())) queue_.pop();
        return queue_.top().time;
    }

    [[nodiscard]] bool is_stale(const detail::Pending& ev) const {
        switch (ev.kind) {
            case EventKind::Arrival: return false;
            case EventKind::NormalClock: return pools_[ev.pool].servers[ev.server].generation != ev.generation;
            case EventKind::BackupClock: return pools_[ev.pool].backup_generation[ev.server] != ev.generation;
        }
        return false;
    }

    void push(double time, EventKind kind, std::size_t pool, std::size_t server, std::uint64_t gen) {
        queue_.push({time, seq_++, kind, static_cast<std::uint32_t>(pool), server, gen});
    }

    void schedule_arrival() {
        push(clock_ + exponential(arrival_rng_, total_arrival_rate_), EventKind::Arrival, 0, 0, 0);
    }

    [[nodiscard]] double normal_rate(const Pool& p, const NormalServerState& v) const {
        double rate = job_rate_[v.observed];
        if (v.token_total == 0) rate += p.policy->timer_rate(v.observed);
        return rate;
    }

    void reschedule(std::size_t j, std::size_t s) {
        Pool& p = pools_[j];
        NormalServerState& v = p.servers[s];
        ++v.generation;
        const double rate = normal_rate(p, v);
        if (rate > 0.0) push(clock_ + exponential(p.server_rng, rate), EventKind::NormalClock, j, s, v.generation);
    }

    // ---- metrics ----------------------------------------------------------

    void integrate(double t) {
        if (acc_ == nullptr) {
            last_time_ = t;
            return;
        }
        const double t0 = std::max(last_time_, acc_->window_start);
        const double t1 = std::min(t, acc_->window_end);
        last_time_ = t;
        if (!(t1 > t0)) return;
        acc_->active.add(t0, t1, static_cast<double>(active_));
        acc_->cost.add(t0, t1, cost_total_);
        acc_->virtual_jobs.add(t0, t1, static_cast<double>(virtual_total_));
        acc_->backup_jobs.add(t0, t1, static_cast<double>(backup_jobs_));
        acc_->real_jobs.add(t0, t1, static_cast<double>(real_total_));
        for (std::size_t i = 0; i < phases_; ++i) {
            std::size_t z = 0;
            for (const auto& p : pools_) z += p.tokens[i].size();
            acc_->tokens[i].add(t0, t1, static_cast<double>(z));
        }
        const double dt = t1 - t0;
        for (std::size_t n = 0; n < occupancy_.size(); ++n) {
            if (occupancy_[n] != 0) acc_->occupancy[n] += dt * static_cast<double>(occupancy_[n]);
        }
    }

    // Bookkeeping for a change of a normal server's real configuration.
    void real_changed(std::size_t before, std::size_t after) {
        if (before == after) return;
        --occupancy_[before];
        ++occupancy_[after];
        cost_total_ += (*cost_)(after) - (*cost_)(before);
        if (before == 0) ++active_;
        if (after == 0) --active_;
    }

    // ---- token logic ------------------------------------------------------

    // Issues the request vector a from server s, one token at a time, then
    // enforces the token limit after each token.
    void request(std::size_t j, std::size_t s, const std::vector<int>& a) {
        Pool& p = pools_[j];
        if (options_.debug && p.servers[s].token_total > 0) {
            throw InvariantBreach("server " + std::to_string(s) + " requested jobs while holding tokens");
        }
        for (std::size_t i = 0; i < phases_; ++i) {
            for (int c = 0; c < a[i]; ++c) {
                NormalServerState& v = p.servers[s];
                ++v.tokens[i];
                ++v.token_total;
                p.tokens[i].add(static_cast<std::uint32_t>(s));
                ++requests_made_;
                while (p.tokens[i].size() > p.eta_max) virtual_arrival(j, i);
            }
        }
    }

    void virtual_arrival(std::size_t j, std::size_t i) {
        Pool& p = pools_[j];
        const std::size_t s = p.tokens[i].take(p.token_rng);
        NormalServerState& v = p.servers[s];
        --v.tokens[i];
        --v.token_total;
        ++v.virtual_jobs[i];
        v.observed = space_->plus(v.observed, i);
        ++virtual_total_;
        ++virtual_arrivals_;
        touched_.push_back({j, s});
        if (v.token_total == 0) resume_.push_back({j, s});
    }

    // Sampled terminal of the subroutine's request chain from configuration n.
    const single_server::ChainOutcome& sample_chain(Pool& p, std::size_t n) {
        const auto& outs = p.policy->resolve(n);
        if (outs.size() == 1) return outs.front();
        double x = uniform01(p.server_rng);
        for (const auto& o : outs) {
            if (x < o.prob) return o;
            x -= o.prob;
        }
        return outs.back();
    }

    // A server without tokens evaluates its action; an impulse state fires.
    void drain_resumes() {
        while (!resume_.empty()) {
            const auto [j, s] = resume_.front();
            resume_.pop_front();
            Pool& p = pools_[j];
            NormalServerState& v = p.servers[s];
            touched_.push_back({j, s});
            if (v.token_total != 0 || !p.policy->is_impulse(v.observed)) continue;
            const auto& out = sample_chain(p, v.observed);
            request(j, s, out.requests);
        }
        for (const auto& [j, s] : touched_) reschedule(j, s);
        touched_.clear();
    }

    // ---- event handlers ---------------------------------------------------

    void on_arrival(EventRecord& rec) {
        std::size_t type = phases_ - 1;
        {
            double x = uniform01(arrival_rng_) * total_arrival_rate_;
            for (std::size_t i = 0; i < phases_; ++i) {
                const double w = model_->arrival_coeff(i) * r_;
                if (x < w) {
                    type = i;
                    break;
                }
                x -= w;
            }
        }
        std::size_t j = pools_.size() - 1;
        if (pools_.size() > 1) {
            double x = uniform01(routing_rng_);
            for (std::size_t q = 0; q < pools_.size(); ++q) {
                if (x < routing_[type][q]) {
                    j = q;
                    break;
                }
                x -= routing_[type][q];
            }
        } else {
            j = 0;
        }
        rec.type = type;
        rec.pool = j;
        Pool& p = pools_[j];
        ++real_total_;
        if (p.tokens[type].size() > 0) {
            const std::size_t s = p.tokens[type].take(p.token_rng);
            NormalServerState& v = p.servers[s];
            --v.tokens[type];
            --v.token_total;
            ++v.real[type];
            v.observed = space_->plus(v.observed, type);
            const std::size_t before = v.real_config;
            v.real_config = space_->plus(v.real_config, type);
            real_changed(before, v.real_config);
            rec.kind = "arrival-token";
            rec.server = s;
            touched_.push_back({j, s});
            if (v.token_total == 0) resume_.push_back({j, s});
            drain_resumes();
        } else {
            std::size_t b;
            if (p.idle_backups.empty()) {
                b = p.backup_phase.size();
                p.backup_phase.push_back(-1);
                p.backup_generation.push_back(0);
            } else {
                b = p.idle_backups.top();
                p.idle_backups.pop();
            }
            p.backup_phase[b] = static_cast<int>(type);
            ++p.busy_backups;
            ++backup_jobs_;
            ++active_;
            ++occupancy_[unit_config_[type]];
            cost_total_ += (*cost_)(unit_config_[type]);
            schedule_backup(j, b);
            ++backup_arrivals_;
            rec.kind = "arrival-backup";
            rec.server = p.servers.size() + b;
        }
        schedule_arrival();
    }

    void schedule_backup(std::size_t j, std::size_t b) {
        Pool& p = pools_[j];
        ++p.backup_generation[b];
        const auto phase = static_cast<std::size_t>(p.backup_phase[b]);
        const double rate = model_->total_exit_rate({phase});
        push(clock_ + exponential(p.server_rng, rate), EventKind::BackupClock, j, b, p.backup_generation[b]);
    }

    void on_backup_clock(std::size_t j, std::size_t b, EventRecord& rec) {
        Pool& p = pools_[j];
        const auto phase = static_cast<std::size_t>(p.backup_phase[b]);
        rec.server = p.servers.size() + b;
        rec.type = phase;
        double x = uniform01(p.server_rng) * model_->total_exit_rate({phase});
        const std::size_t before = unit_config_[phase];
        for (std::size_t to = 0; to < phases_; ++to) {
            if (to == phase) continue;
            const double w = model_->internal_rate(phase, to);
            if (x < w) {
                p.backup_phase[b] = static_cast<int>(to);
                --occupancy_[before];
                ++occupancy_[unit_config_[to]];
                cost_total_ += (*cost_)(unit_config_[to]) - (*cost_)(before);
                rec.kind = "backup-internal";
                schedule_backup(j, b);
                return;
            }
            x -= w;
        }
        p.backup_phase[b] = -1;
        ++p.backup_generation[b];
        p.idle_backups.push(b);
        --p.busy_backups;
        --backup_jobs_;
        --real_total_;
        --active_;
        --occupancy_[before];
        cost_total_ -= (*cost_)(before);
        rec.kind = "backup-departure";
    }

    void on_normal_clock(std::size_t j, std::size_t s, EventRecord& rec) {
        Pool& p = pools_[j];
        NormalServerState& v = p.servers[s];
        const double jobs = job_rate_[v.observed];
        const double rate = normal_rate(p, v);
        double x = uniform01(p.server_rng) * rate;
        if (x < jobs) {
            const detail::JobMove* mv = &moves_[v.observed].back();
            for (const auto& m : moves_[v.observed]) {
                if (x < m.rate) {
                    mv = &m;
                    break;
                }
                x -= m.rate;
            }
            const std::size_t i = mv->from;
            rec.type = i;
            const int count = v.real[i] + v.virtual_jobs[i];
            const bool real = uniform_index(p.server_rng, static_cast<std::size_t>(count)) <
                              static_cast<std::size_t>(v.real[i]);
            const std::size_t before = v.real_config;
            if (real) {
                --v.real[i];
                v.real_config = space_->minus(v.real_config, i);
            } else {
                --v.virtual_jobs[i];
                --virtual_total_;
            }
            v.observed = space_->minus(v.observed, i);
            if (mv->to == phases_) {
                rec.kind = "departure";
                if (real) --real_total_;
            } else {
                rec.kind = "internal";
                if (real) {
                    ++v.real[mv->to];
                    v.real_config = space_->plus(v.real_config, mv->to);
                } else {
                    ++v.virtual_jobs[mv->to];
                    ++virtual_total_;
                }
                v.observed = space_->plus(v.observed, mv->to);
            }
            real_changed(before, v.real_config);
            touched_.push_back({j, s});
            if (v.token_total == 0) resume_.push_back({j, s});  // reactive request, if any
            drain_resumes();
            return;
        }
        // timer-driven request; only scheduled while the server holds no tokens
        x -= jobs;
        std::vector<int> a(phases_, 0);
        const auto& act = p.policy->action(v.observed);
        if (const auto* pr = std::get_if<single_server::Proactive>(&act)) {
            std::size_t pick = phases_;
            for (std::size_t i = 0; i < phases_; ++i) {
                if (!(pr->rates[i] > 0.0)) continue;
                pick = i;
                if (x < pr->rates[i]) break;
                x -= pr->rates[i];
            }
            a[pick] = 1;
            const auto& out = sample_chain(p, space_->plus(v.observed, pick));
            for (std::size_t i = 0; i < phases_; ++i) a[i] += out.requests[i];
            rec.type = pick;
        } else if (const auto* e = std::get_if<single_server::Escape>(&act)) {
            const Config& target = space_->config_at(e->target);
            const Config& here = space_->config_at(v.observed);
            for (std::size_t i = 0; i < phases_; ++i) a[i] = target[i] - here[i];
            const auto& out = sample_chain(p, e->target);
            for (std::size_t i = 0; i < phases_; ++i) a[i] += out.requests[i];
        }
        rec.kind = "request";
        request(j, s, a);
        touched_.push_back({j, s});
        drain_resumes();
    }

    const JobModel* model_;
    const ConfigSpace* space_;
    const CostFn* cost_;
    SimOptions options_;
    std::size_t phases_;
    double r_ = 0.0;
    double phi_star_ = 0.0;
    double nbar_ = 0.0;
    double total_arrival_rate_ = 0.0;
    std::vector<std::vector<double>> routing_;  // routing_[type][pool]
    std::vector<std::vector<detail::JobMove>> moves_;
    std::vector<double> job_rate_;
    std::vector<std::size_t> unit_config_;
    std::vector<Pool> pools_;
    Rng arrival_rng_;
    Rng routing_rng_;
    std::priority_queue<detail::Pending, std::vector<detail::Pending>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    double clock_ = 0.0;
    double last_time_ = 0.0;
    std::deque<std::pair<std::size_t, std::size_t>> resume_;
    std::vector<std::pair<std::size_t, std::size_t>> touched_;

    metrics::MetricsAccumulator* acc_ = nullptr;
    long active_ = 0;
    double cost_total_ = 0.0;
    long virtual_total_ = 0;
    long backup_jobs_ = 0;
    long real_total_ = 0;
    std::vector<long> occupancy_;
    std::uint64_t requests_made_ = 0;
    std::uint64_t virtual_arrivals_ = 0;
    std::uint64_t backup_arrivals_ = 0;
};

}  // namespace sbp::infinite_sim

#pragma once

#include <sbp/config_space.hpp>
#include <sbp/error.hpp>
#include <sbp/infinite_sim/baseline.hpp>
#include <sbp/infinite_sim/world.hpp>
#include <sbp/job_model.hpp>
#include <sbp/lp_core.hpp>
#include <sbp/metrics.hpp>
#include <sbp/rng.hpp>
#include <sbp/single_server/ctmc_oracle.hpp>
#include <sbp/single_server/decomposition.hpp>
#include <sbp/single_server/policy.hpp>
#include <sbp/single_server/simulate.hpp>

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace sbp::experiment {

using json = nlohmann::json;

/// Malformed or inconsistent experiment description.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct CostSpec {
    std::string type = "zero";  // zero | overcommit | table
    std::vector<std::vector<double>> weights;
    std::vector<double> capacity;
    std::vector<double> table;
};

/// Explicit single-server operating point, used instead of solving the LP.
struct PolicySpec {
    std::vector<double> pi;
    std::vector<std::vector<double>> u;
};

struct ExperimentConfig {
    std::vector<std::vector<double>> internal_rates;
    std::vector<double> departure_rates;
    std::vector<double> lambda;
    int kmax = 1;
    CostSpec cost;
    double epsilon = 0.0;
    std::vector<double> r_values{1.0};
    double horizon_events = 1e6;
    double warmup_fraction = 0.1;
    std::size_t replications = 1;
    std::uint64_t master_seed = 1;
    std::size_t batches = 20;
    std::vector<std::string> baselines;
    std::optional<PolicySpec> policy;
};

// ---- parsing ----------------------------------------------------------------

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config field '" + path + "': " + what);
}

inline std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

inline double number(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail(path, "must be finite");
    return v;
}

inline std::vector<double> numbers(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::vector<double>> matrix(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(numbers(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::uint64_t unsigned_int(const json& j, const std::string& path) {
    if (!j.is_number_integer() || (j.is_number_integer() && j.get<long long>() < 0 && !j.is_number_unsigned())) {
        fail(path, "expected a nonnegative integer");
    }
    return j.get<std::uint64_t>();
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) fail(join(path, key), "is required");
    return obj.at(key);
}

inline void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& path) {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : obj.items()) {
        if (!ok.count(k)) fail(join(path, k), "unknown field");
    }
}

inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Builds a validated configuration from JSON. Every error names the field path.
inline ExperimentConfig config_from_json(const json& root) {
    using namespace detail;
    only_keys(root, {"model", "kmax", "cost", "epsilon", "r_values", "horizon_events", "warmup_fraction",
                     "replications", "master_seed", "batches", "baselines", "policy"},
              "");
    ExperimentConfig c;
    const json& m = require(root, "model", "");
    only_keys(m, {"phases", "internal_rates", "departure_rates", "lambda"}, "model");
    const auto phases = static_cast<std::size_t>(unsigned_int(require(m, "phases", "model"), "model.phases"));
    if (phases < 1) fail("model.phases", "must be at least 1");
    c.departure_rates = numbers(require(m, "departure_rates", "model"), "model.departure_rates");
    c.lambda = numbers(require(m, "lambda", "model"), "model.lambda");
    if (m.contains("internal_rates")) {
        c.internal_rates = matrix(m.at("internal_rates"), "model.internal_rates");
    } else {
        c.internal_rates.assign(phases, std::vector<double>(phases, 0.0));
    }
    if (c.departure_rates.size() != phases) fail("model.departure_rates", "needs one entry per phase");
    if (c.lambda.size() != phases) fail("model.lambda", "needs one entry per phase");
    if (c.internal_rates.size() != phases) fail("model.internal_rates", "needs one row per phase");
    for (std::size_t i = 0; i < phases; ++i) {
        if (c.internal_rates[i].size() != phases) {
            fail("model.internal_rates[" + std::to_string(i) + "]", "needs one entry per phase");
        }
    }

    const auto kmax = unsigned_int(require(root, "kmax", ""), "kmax");
    if (kmax < 1 || kmax > 1000) fail("kmax", "must be between 1 and 1000");
    c.kmax = static_cast<int>(kmax);

    if (root.contains("cost")) {
        const json& h = root.at("cost");
        only_keys(h, {"type", "weights", "capacity", "values"}, "cost");
        const json& t = require(h, "type", "cost");
        if (!t.is_string()) fail("cost.type", "expected a string");
        c.cost.type = t.get<std::string>();
        if (c.cost.type == "overcommit") {
            c.cost.weights = matrix(require(h, "weights", "cost"), "cost.weights");
            c.cost.capacity = numbers(require(h, "capacity", "cost"), "cost.capacity");
            if (c.cost.weights.size() != c.cost.capacity.size()) {
                fail("cost.capacity", "needs one entry per resource row of cost.weights");
            }
            for (std::size_t q = 0; q < c.cost.weights.size(); ++q) {
                if (c.cost.weights[q].size() != phases) {
                    fail("cost.weights[" + std::to_string(q) + "]", "needs one entry per phase");
                }
            }
        } else if (c.cost.type == "table") {
            c.cost.table = numbers(require(h, "values", "cost"), "cost.values");
        } else if (c.cost.type != "zero") {
            fail("cost.type", "must be one of zero, overcommit, table");
        }
    }
    if (root.contains("epsilon")) c.epsilon = number(root.at("epsilon"), "epsilon");
    if (c.epsilon < 0.0) fail("epsilon", "must be nonnegative");

    if (root.contains("r_values")) c.r_values = numbers(root.at("r_values"), "r_values");
    if (c.r_values.empty()) fail("r_values", "must not be empty");
    for (std::size_t i = 0; i < c.r_values.size(); ++i) {
        if (!(c.r_values[i] > 0.0)) fail("r_values[" + std::to_string(i) + "]", "must be positive");
    }
    if (root.contains("horizon_events")) c.horizon_events = number(root.at("horizon_events"), "horizon_events");
    if (!(c.horizon_events > 0.0)) fail("horizon_events", "must be positive");
    if (root.contains("warmup_fraction")) c.warmup_fraction = number(root.at("warmup_fraction"), "warmup_fraction");
    if (!(c.warmup_fraction >= 0.0 && c.warmup_fraction < 1.0)) fail("warmup_fraction", "must lie in [0, 1)");
    if (root.contains("replications")) {
        c.replications = static_cast<std::size_t>(unsigned_int(root.at("replications"), "replications"));
    }
    if (c.replications < 1) fail("replications", "must be at least 1");
    if (root.contains("master_seed")) c.master_seed = unsigned_int(root.at("master_seed"), "master_seed");
    if (root.contains("batches")) c.batches = static_cast<std::size_t>(unsigned_int(root.at("batches"), "batches"));
    if (c.batches < 2) fail("batches", "must be at least 2");
    if (root.contains("baselines")) {
        const json& b = root.at("baselines");
        if (!b.is_array()) fail("baselines", "expected an array of strings");
        for (std::size_t i = 0; i < b.size(); ++i) {
            const std::string path = "baselines[" + std::to_string(i) + "]";
            if (!b[i].is_string()) fail(path, "expected a string");
            try {
                (void)infinite_sim::parse_baseline(b[i].get<std::string>());
            } catch (const ModelError& e) {
                fail(path, e.what());
            }
            c.baselines.push_back(b[i].get<std::string>());
        }
    }
    if (root.contains("policy")) {
        const json& p = root.at("policy");
        only_keys(p, {"pi", "u"}, "policy");
        PolicySpec ps;
        ps.pi = numbers(require(p, "pi", "policy"), "policy.pi");
        ps.u = matrix(require(p, "u", "policy"), "policy.u");
        if (ps.u.size() != phases) fail("policy.u", "needs one row per phase");
        c.policy = std::move(ps);
    }
    return c;
}

/// Parses JSON text; syntax errors report line and column.
inline ExperimentConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte);
        throw ConfigError("config parse error at line " + std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
    return config_from_json(root);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// Canonical form of a configuration with every default spelled out.
inline json resolved_json(const ExperimentConfig& c) {
    json j;
    j["model"] = {{"phases", c.lambda.size()},
                  {"internal_rates", c.internal_rates},
                  {"departure_rates", c.departure_rates},
                  {"lambda", c.lambda}};
    j["kmax"] = c.kmax;
    json h{{"type", c.cost.type}};
    if (c.cost.type == "overcommit") {
        h["weights"] = c.cost.weights;
        h["capacity"] = c.cost.capacity;
    } else if (c.cost.type == "table") {
        h["values"] = c.cost.table;
    }
    j["cost"] = h;
    j["epsilon"] = c.epsilon;
    j["r_values"] = c.r_values;
    j["horizon_events"] = c.horizon_events;
    j["warmup_fraction"] = c.warmup_fraction;
    j["replications"] = c.replications;
    j["master_seed"] = c.master_seed;
    j["batches"] = c.batches;
    j["baselines"] = c.baselines;
    if (c.policy) j["policy"] = {{"pi", c.policy->pi}, {"u", c.policy->u}};
    return j;
}

/// Git blob hash (SHA-1 over "blob <size>\0<content>") as lowercase hex.
inline std::string git_blob_hash(const std::string& content) {
    const std::string header = "blob " + std::to_string(content.size()) + std::string(1, '\0');
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), header.data(), header.size()) != 1 ||
        EVP_DigestUpdate(ctx.get(), content.data(), content.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw Error("SHA-1 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", digest[i]);
        hex += buf;
    }
    return hex;
}

inline std::string config_hash(const ExperimentConfig& c) { return git_blob_hash(resolved_json(c).dump(2) + "\n"); }

// ---- shared setup -----------------------------------------------------------

/// Model, space and cost owned together so that policies can point into them.
struct Instance {
    JobModel model;
    ConfigSpace space;
    CostFn cost;

    explicit Instance(const ExperimentConfig& c)
        : model(c.internal_rates, c.departure_rates, c.lambda),
          space(c.lambda.size(), c.kmax),
          cost(make_cost(c, space)) {}

    Instance(const Instance&) = delete;
    Instance& operator=(const Instance&) = delete;

private:
    static CostFn make_cost(const ExperimentConfig& c, const ConfigSpace& s) {
        if (c.cost.type == "overcommit") return CostFn::overcommit(s, c.cost.weights, c.cost.capacity);
        if (c.cost.type == "table") {
            if (c.cost.table.size() != s.size()) {
                throw ConfigError("config field 'cost.values': needs " + std::to_string(s.size()) +
                                  " entries, one per configuration in canonical order");
            }
            return CostFn::from_table(s, c.cost.table);
        }
        return CostFn::zero(s);
    }
};

/// LP optimum, or the operating point given in the config.
struct OperatingPoint {
    std::vector<double> pi;
    std::vector<std::vector<double>> u;
    double phi = 0.0;
    bool from_lp = false;
    std::optional<LpSolution> lp;
};

inline OperatingPoint operating_point(const ExperimentConfig& c, const Instance& inst) {
    OperatingPoint op;
    if (c.policy) {
        const std::size_t n = inst.space.size();
        if (c.policy->pi.size() != n) {
            throw ConfigError("config field 'policy.pi': needs " + std::to_string(n) + " entries");
        }
        for (std::size_t i = 0; i < c.policy->u.size(); ++i) {
            if (c.policy->u[i].size() != n) {
                throw ConfigError("config field 'policy.u[" + std::to_string(i) + "]': needs " + std::to_string(n) +
                                  " entries");
            }
        }
        op.pi = c.policy->pi;
        op.u = c.policy->u;
        double best = 0.0;
        for (std::size_t i = 0; i < c.lambda.size(); ++i) {
            if (c.lambda[i] <= best) continue;
            best = c.lambda[i];
            double rate = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                if (!inst.space.is_full(k)) rate += op.u[i][k];
            }
            op.phi = rate / best;
        }
        return op;
    }
    LpSolution sol = solve_lp(assemble_lp(inst.model, inst.space, inst.cost, c.epsilon));
    op.pi = sol.pi;
    op.u = sol.u;
    op.phi = sol.phi;
    op.from_lp = true;
    op.lp = std::move(sol);
    return op;
}

inline json config_json(const ConfigSpace& s, std::size_t n) { return json(s.config_at(n)); }

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_provenance(const std::filesystem::path& dir, const ExperimentConfig& c) {
    std::filesystem::create_directories(dir);
    write_text(dir / "resolved_config.json", resolved_json(c).dump(2) + "\n");
}

// ---- lp-solve ---------------------------------------------------------------

inline json cmd_lp_solve(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    const Instance inst(c);
    const LpSolution sol = solve_lp(assemble_lp(inst.model, inst.space, inst.cost, c.epsilon));
    json j;
    j["config_hash"] = config_hash(c);
    j["resolved_config"] = resolved_json(c);
    j["phi_star"] = sol.phi;
    j["residual"] = sol.residual;
    j["stationary_residual"] = stationary_residual(inst.model, inst.space, sol.pi, sol.u);
    j["iterations"] = sol.iterations;
    json rows = json::array();
    for (std::size_t n = 0; n < inst.space.size(); ++n) {
        json u = json::array();
        for (std::size_t i = 0; i < sol.u.size(); ++i) u.push_back(sol.u[i][n]);
        rows.push_back({{"config", config_json(inst.space, n)}, {"pi", sol.pi[n]}, {"u", u}});
    }
    j["configurations"] = rows;
    json nbar = json::array();
    for (double r : c.r_values) nbar.push_back({{"r", r}, {"nbar_star", nbar_star(sol.phi, r)}});
    j["nbar_star"] = nbar;
    write_provenance(out_dir, c);
    write_text(out_dir / "lp_solution.json", j.dump(2) + "\n");
    return j;
}

// ---- verify-single ----------------------------------------------------------

/// Simulation horizon (time) expected to produce `events` events of one server.
inline double single_server_horizon(const single_server::SingleServerPolicy& pol, const JobModel& m,
                                    const std::vector<double>& pi, double events) {
    double rate = 0.0;
    for (std::size_t n = 0; n < pi.size(); ++n) {
        if (pi[n] <= 0.0) continue;
        double r = pol.timer_rate(n);
        for (const auto& ev : single_server::raw_events(pol, m, n)) {
            if (ev.kind == single_server::RawEvent::Kind::Departure || ev.kind == single_server::RawEvent::Kind::Internal) {
                r += ev.rate;
            }
        }
        rate += pi[n] * r;
    }
    if (!(rate > 0.0)) throw DegeneratePolicy("server never changes configuration");
    return events / rate;
}

inline json cmd_verify_single(const ExperimentConfig& c, const std::filesystem::path& out_dir) {
    using namespace single_server;
    const Instance inst(c);
    const OperatingPoint op = operating_point(c, inst);
    const auto pol = build_policy(inst.space, op.pi, op.u);
    const auto dec = decompose(pol, op.pi, op.u, inst.model);
    const std::size_t phases = inst.space.num_phases();

    json j;
    j["config_hash"] = config_hash(c);
    j["resolved_config"] = resolved_json(c);
    j["phi"] = op.phi;
    j["source"] = op.from_lp ? "lp" : "config";
    std::vector<double> mixed(inst.space.size(), 0.0);
    std::vector<double> phi_mix(phases, 0.0);
    double worst_tv = 0.0, worst_rate = 0.0;
    json classes = json::array();
    for (std::size_t k = 0; k < dec.classes.size(); ++k) {
        const auto o = ctmc_oracle(pol, inst.model, dec.classes[k], &inst.cost);
        if (!o.conditional_cost) {
            throw DegeneratePolicy("recurrent class " + std::to_string(k) +
                                   " never serves a job; conditional cost is undefined");
        }
        const double tv = total_variation(o.pi, dec.class_pi[k]);
        worst_tv = std::max(worst_tv, tv);
        json dev = json::array();
        for (std::size_t i = 0; i < phases; ++i) {
            const double d = std::abs(o.request_rates[i] - dec.class_request_rates[k][i]);
            worst_rate = std::max(worst_rate, d);
            dev.push_back(d);
            phi_mix[i] += dec.weights[k] * dec.class_request_rates[k][i];
        }
        for (std::size_t n = 0; n < mixed.size(); ++n) mixed[n] += dec.weights[k] * dec.class_pi[k][n];

        // simulate the class's own policy from the empty configuration
        const auto& sub = dec.policies[k];
        const double horizon = single_server_horizon(sub, inst.model, o.pi, c.horizon_events);
        const auto sim = simulate_single(sub, inst.model, horizon / (1.0 - c.warmup_fraction),
                                         horizon * c.warmup_fraction / (1.0 - c.warmup_fraction),
                                         derive_seed(c.master_seed, k, 0, Stream::Single), c.batches);
        std::vector<double> emp;
        double pi_z = 0.0, u_z = 0.0;
        for (std::size_t n = 0; n < inst.space.size(); ++n) {
            emp.push_back(sim.pi[n].mean);
            auto z = [](double diff, double se) {
                if (diff <= 1e-12) return 0.0;
                return se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
            };
            pi_z = std::max(pi_z, z(std::abs(sim.pi[n].mean - o.pi[n]), sim.pi[n].se));
            for (std::size_t i = 0; i < phases; ++i) {
                u_z = std::max(u_z, z(std::abs(sim.u[i][n].mean - o.u[i][n]), sim.u[i][n].se));
            }
        }
        json members = json::array();
        for (std::size_t n : dec.classes[k]) members.push_back(config_json(inst.space, n));
        classes.push_back({{"members", members},
                           {"weight", dec.weights[k]},
                           {"anchor", config_json(inst.space, dec.anchors[k])},
                           {"tv_oracle_vs_point", tv},
                           {"request_rate_deviation", dev},
                           {"conditional_cost", *o.conditional_cost},
                           {"busy_probability", 1.0 - o.pi[0]},
                           {"simulation",
                            {{"events", sim.events},
                             {"tv_vs_oracle", total_variation(emp, o.pi)},
                             {"max_pi_z", pi_z},
                             {"max_u_z", u_z}}}});
    }
    double pi_res = 0.0, phi_res = 0.0;
    for (std::size_t n = 0; n < mixed.size(); ++n) pi_res = std::max(pi_res, std::abs(mixed[n] - op.pi[n]));
    for (std::size_t i = 0; i < phases; ++i) {
        double total = 0.0;
        for (std::size_t n = 0; n < inst.space.size(); ++n) {
            if (!inst.space.is_full(n)) total += op.u[i][n];
        }
        phi_res = std::max(phi_res, std::abs(phi_mix[i] - total));
    }
    j["classes"] = classes;
    j["max_tv_oracle_vs_point"] = worst_tv;
    j["max_request_rate_deviation"] = worst_rate;
    j["reconstruction"] = {{"pi_residual", pi_res}, {"phi_residual", phi_res}};
    write_provenance(out_dir, c);
    write_text(out_dir / "verify_single.json", j.dump(2) + "\n");
    return j;
}

// ---- simulate ---------------------------------------------------------------

struct RunOptions {
    std::size_t workers = 1;
    bool trace = false;  // per-run event trace files plus invariant checks on every event
};

/// Runs tasks on `workers` threads; the first failure (in task order) is rethrown.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& task) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto body = [&] {
        for (std::size_t t = next++; t < count; t = next++) {
            try {
                task(t);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        body();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
        for (auto& t : pool) t.join();
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

/// Expected events per unit time at scale r: arrivals plus every job's phase jumps.
inline double base_event_rate(const JobModel& m, double r) {
    const auto jumps = m.expected_jump_counts();
    double rate = 0.0;
    for (std::size_t i = 0; i < m.num_phases(); ++i) rate += m.arrival_coeff(i) * r * (1.0 + jumps[i]);
    return rate;
}

struct RunResult {
    std::string policy;  // "jrs" or a baseline name
    double r = 0.0;
    std::size_t replication = 0;
    metrics::MetricsAccumulator acc;
    double horizon = 0.0;
    double warmup = 0.0;
    std::size_t normal_servers = 0;
};

struct SimulateOutput {
    std::string csv;
    json fit;
};

inline std::string fmt(double v) {
    if (!std::isfinite(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline SimulateOutput cmd_simulate(const ExperimentConfig& c, const std::filesystem::path& out_dir,
                                   const RunOptions& opt = {}) {
    using namespace single_server;
    const Instance inst(c);
    const OperatingPoint op = operating_point(c, inst);
    const auto pol = build_policy(inst.space, op.pi, op.u);
    const auto dec = decompose(pol, op.pi, op.u, inst.model);
    double idle = 0.0;  // P(K = 0) mixed over classes
    for (std::size_t k = 0; k < dec.classes.size(); ++k) {
        idle += dec.weights[k] * ctmc_oracle(pol, inst.model, dec.classes[k]).pi[0];
    }
    const double busy = 1.0 - idle;
    const std::string hash = config_hash(c);
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> policies{"jrs"};
    for (const auto& b : c.baselines) policies.push_back(b);
    std::vector<RunResult> runs;
    for (double r : c.r_values) {
        for (const auto& p : policies) {
            for (std::size_t rep = 0; rep < c.replications; ++rep) runs.push_back({p, r, rep, {}, 0.0, 0.0, 0});
        }
    }
    parallel_for(runs.size(), opt.workers, [&](std::size_t t) {
        RunResult& run = runs[t];
        const double span = c.horizon_events / base_event_rate(inst.model, run.r);
        run.warmup = span * c.warmup_fraction / (1.0 - c.warmup_fraction);
        run.horizon = run.warmup + span;
        const std::uint64_t rep = run.replication;
        if (run.policy == "jrs") {
            std::unique_ptr<std::ofstream> trace;
            infinite_sim::SimOptions so;
            so.batches = c.batches;
            if (opt.trace) {
                trace = std::make_unique<std::ofstream>(out_dir / ("trace_r" + fmt(run.r) + "_rep" +
                                                                   std::to_string(rep) + ".txt"));
                *trace << "# time kind pool server type\n";
                so.trace = trace.get();
                so.debug = true;
            }
            infinite_sim::SimWorld w(inst.model, inst.space, inst.cost, dec, run.r, c.master_seed, rep, so);
            for (const auto& p : w.pools()) run.normal_servers += p.servers.size();
            run.acc = w.run(run.horizon, run.warmup);
        } else {
            run.acc = infinite_sim::run_baseline(inst.model, inst.space, inst.cost, run.r,
                                                 infinite_sim::parse_baseline(run.policy), run.horizon, run.warmup,
                                                 c.master_seed, rep, c.batches);
        }
    });

    std::ostringstream csv;
    csv << "# config_hash=" << hash << "\n";
    csv << "# resolved_config=" << resolved_json(c).dump() << "\n";
    csv << "r,replication,policy,nbar_star,normal_servers,comparator,horizon,warmup,events,"
           "n_hat,n_se,n_ci_low,n_ci_high,c_hat,c_se,c_ci_low,c_ci_high,"
           "virtual_hat,virtual_se,backup_hat,backup_se,jobs_hat,jobs_se";
    for (std::size_t i = 0; i < inst.space.num_phases(); ++i) csv << ",z" << i << "_hat";
    csv << "\n";
    auto row = [&](const std::string& rep, const RunResult& run, const metrics::MetricsAccumulator& acc) {
        const auto e = metrics::estimate(acc);
        const double nb = nbar_star(op.phi, run.r);
        csv << fmt(run.r) << ',' << rep << ',' << run.policy << ',' << fmt(nb) << ',' << run.normal_servers << ','
            << fmt(std::ceil(nb - 1e-9) * busy) << ',' << fmt(run.horizon) << ',' << fmt(run.warmup) << ','
            << acc.events << ',' << fmt(e.n_hat.mean) << ',' << fmt(e.n_hat.se) << ',' << fmt(e.n_hat.ci_low) << ','
            << fmt(e.n_hat.ci_high) << ',' << fmt(e.c_hat.mean) << ',' << fmt(e.c_hat.se) << ','
            << fmt(e.c_hat.ci_low) << ',' << fmt(e.c_hat.ci_high) << ',' << fmt(e.virtual_hat.mean) << ','
            << fmt(e.virtual_hat.se) << ',' << fmt(e.backup_hat.mean) << ',' << fmt(e.backup_hat.se) << ','
            << fmt(e.jobs_hat.mean) << ',' << fmt(e.jobs_hat.se);
        for (const auto& z : e.z_hat) csv << ',' << fmt(z.mean);
        csv << "\n";
        return e;
    };

    std::vector<metrics::ScalingPoint> points;
    json per_r = json::array();
    std::size_t t = 0;
    for (double r : c.r_values) {
        for (const auto& p : policies) {
            metrics::MetricsAccumulator merged;
            RunResult summary{p, r, 0, {}, 0.0, 0.0, 0};
            for (std::size_t rep = 0; rep < c.replications; ++rep, ++t) {
                row(std::to_string(rep), runs[t], runs[t].acc);
                merged.merge(runs[t].acc);
                summary.horizon = runs[t].horizon;
                summary.warmup = runs[t].warmup;
                summary.normal_servers = runs[t].normal_servers;
            }
            const auto e = row("all", summary, merged);
            if (p != "jrs") continue;
            const double nb = nbar_star(op.phi, r);
            const double comparator = std::ceil(nb - 1e-9) * busy;
            points.push_back({r, e.n_hat.mean, e.n_hat.se, comparator});
            per_r.push_back({{"r", r},
                             {"n_hat", e.n_hat.mean},
                             {"n_se", e.n_hat.se},
                             {"comparator", comparator},
                             {"gap", e.n_hat.mean - comparator},
                             {"c_hat", e.c_hat.defined ? json(e.c_hat.mean) : json(nullptr)},
                             {"virtual_over_sqrt_r", e.virtual_hat.mean / std::sqrt(r)},
                             {"backup_over_sqrt_r", e.backup_hat.mean / std::sqrt(r)},
                             {"events", merged.events}});
        }
    }

    json fit;
    fit["config_hash"] = hash;
    fit["resolved_config"] = resolved_json(c);
    fit["phi_star"] = op.phi;
    fit["busy_probability"] = busy;
    fit["epsilon"] = c.epsilon;
    fit["points"] = per_r;
    if (points.size() >= 3) {
        const auto f = metrics::gap_scaling(points);
        fit["slope"] = f.slope;
        fit["intercept"] = f.intercept;
        fit["slope_se"] = f.slope_se;
        fit["slope_ci"] = {f.slope_ci_low, f.slope_ci_high};
    } else {
        fit["slope"] = nullptr;
        fit["note"] = "gap scaling needs at least three r values";
    }
    // smallest c with C_hat <= eps (1 + c / sqrt(r)) on the whole grid
    if (c.epsilon > 0.0) {
        double cfit = 0.0;
        for (const auto& p : per_r) {
            if (p["c_hat"].is_null()) continue;
            cfit = std::max(cfit, (p["c_hat"].get<double>() / c.epsilon - 1.0) * std::sqrt(p["r"].get<double>()));
        }
        fit["cost_excess_c"] = cfit;
    }

    SimulateOutput out{csv.str(), fit};
    write_provenance(out_dir, c);
    write_text(out_dir / "metrics.csv", out.csv);
    write_text(out_dir / "scaling_fit.json", fit.dump(2) + "\n");
    return out;
}

}  // namespace sbp::experiment

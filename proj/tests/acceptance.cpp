// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <sbp/experiment.hpp>

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace sbp;
using namespace sbp::single_server;
namespace ex = sbp::experiment;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        if (!detail.empty()) detail += "; ";
        detail += (ok ? "" : "FAILED ") + what;
    }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

JobModel fig1_model() { return JobModel({{0, 1}, {1, 0}}, {1, 2}, {1, 1}); }

struct Fig1 {
    JobModel model = fig1_model();
    ConfigSpace space{2, 3};
    CostFn cost = CostFn::overcommit(space, {{1.0, 2.0}}, {3.0});
    LpProblem problem = assemble_lp(model, space, cost, 0.1);
    LpSolution sol = solve_lp(problem);
};

double elapsed_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ----------------------------------------------------------------------
Outcome lp_exactness() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const ConfigSpace s(1, 1);
    for (double lambda : {1.0, 2.0}) {
        const auto sol = solve_lp(assemble_lp(JobModel::exponential(1.0, lambda), s, CostFn::zero(s), 0.0));
        const double want = 1.0 / lambda;
        o.require(std::abs(sol.phi - want) <= 1e-9, "lambda=" + num(lambda) + " phi*=" + num(sol.phi));
    }
    const double t = elapsed_since(t0);
    o.require(t < 1.0, "runtime " + num(t) + " s");
    return o;
}

// ---- 2 ----------------------------------------------------------------------
Outcome lp_residuals() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Fig1 f;
    const double stat = stationary_residual(f.model, f.space, f.sol.pi, f.sol.u);
    o.require(stat <= 1e-8, "stationary residual " + num(stat));
    // budget: h'pi <= eps (1 - pi(0))
    double hpi = 0.0;
    for (std::size_t n = 0; n < f.space.size(); ++n) hpi += f.cost(n) * f.sol.pi[n];
    const double budget = hpi - 0.1 * (1.0 - f.sol.pi[0]);
    o.require(budget <= 1e-8, "budget excess " + num(budget));
    double thr = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        double total = 0.0;
        for (std::size_t n = 0; n < f.space.size(); ++n) {
            if (!f.space.is_full(n)) total += f.sol.u[i][n];
        }
        thr = std::max(thr, std::abs(total - f.sol.phi * f.model.arrival_coeff(i)));
    }
    o.require(thr <= 1e-8, "throughput residual " + num(thr));
    o.require(constraint_residual(f.problem, f.sol) <= 1e-8, "all rows " + num(constraint_residual(f.problem, f.sol)));
    const double t = elapsed_since(t0);
    o.require(t < 1.0, "runtime " + num(t) + " s");
    return o;
}

// ---- 3 ----------------------------------------------------------------------
Outcome oracle_equivalence() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Fig1 f;
    const auto pol = build_policy(f.sol, f.space);
    const auto dec = decompose(pol, f.sol, f.model);
    std::vector<double> phi(2, 0.0);
    double worst_tv = 0.0;
    for (std::size_t k = 0; k < dec.classes.size(); ++k) {
        const auto r = ctmc_oracle(pol, f.model, dec.classes[k]);
        worst_tv = std::max(worst_tv, total_variation(r.pi, dec.class_pi[k]));
        for (std::size_t i = 0; i < 2; ++i) phi[i] += dec.weights[k] * r.request_rates[i];
    }
    o.require(worst_tv <= 1e-8, std::to_string(dec.classes.size()) + " class(es), max TV " + num(worst_tv));
    double dev = 0.0;
    for (std::size_t i = 0; i < 2; ++i) dev = std::max(dev, std::abs(phi[i] - f.sol.phi * f.model.arrival_coeff(i)));
    o.require(dev <= 1e-8, "max |phi_i - phi* lambda_i| " + num(dev));
    const double t = elapsed_since(t0);
    o.require(t < 1.0, "runtime " + num(t) + " s");
    return o;
}

// ---- 4 ----------------------------------------------------------------------
Outcome single_server_simulation() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Fig1 f;
    const auto pol = build_policy(f.sol, f.space);
    const auto dec = decompose(pol, f.sol, f.model);
    std::vector<std::size_t> all(f.space.size());
    for (std::size_t n = 0; n < all.size(); ++n) all[n] = n;
    const auto oracle = ctmc_oracle(pol, f.model, dec.classes.front());
    const double span = ex::single_server_horizon(pol, f.model, oracle.pi, 1.1e6);
    const auto sim = simulate_single(pol, f.model, span * 1.1, span * 0.1, 4242);
    o.require(sim.events >= 1000000, std::to_string(sim.events) + " events");
    auto z = [](double diff, double se) {
        if (diff <= 1e-12) return 0.0;
        return se > 0.0 ? diff / se : std::numeric_limits<double>::infinity();
    };
    double pi_z = 0.0, u_z = 0.0;
    for (std::size_t n = 0; n < f.space.size(); ++n) {
        pi_z = std::max(pi_z, z(std::abs(sim.pi[n].mean - oracle.pi[n]), sim.pi[n].se));
        for (std::size_t i = 0; i < 2; ++i) {
            u_z = std::max(u_z, z(std::abs(sim.u[i][n].mean - f.sol.u[i][n]), sim.u[i][n].se));
        }
    }
    o.require(pi_z <= 3.0, "max pi deviation " + num(pi_z) + " SE");
    o.require(u_z <= 3.0, "max u deviation " + num(u_z) + " SE");
    const double t = elapsed_since(t0);
    o.require(t < 60.0, "runtime " + num(t) + " s");
    return o;
}

// ---- 5 ----------------------------------------------------------------------

// Time needed for `events` post-warmup events at scale r, plus a 10% warmup.
std::pair<double, double> window_for(const JobModel& m, double r, double events) {
    const double span = events / ex::base_event_rate(m, r);
    return {span * 1.1, span * 0.1};
}

void debug_run(Outcome& o, const JobModel& m, const ConfigSpace& s, const CostFn& h, const RecurrentDecomposition& dec,
               double r, std::uint64_t seed, const std::string& label) {
    infinite_sim::SimOptions opt;
    opt.debug = true;
    infinite_sim::SimWorld w(m, s, h, dec, r, seed, 0, opt);
    const auto [horizon, warmup] = window_for(m, r, 1e6);
    try {
        const auto acc = w.run(horizon, warmup);
        o.require(acc.events >= 1000000,
                  label + " debug run: " + std::to_string(acc.events) + " events, " + std::to_string(w.pools().size()) +
                      " pool(s), no invariant breach");
    } catch (const InvariantBreach& e) {
        o.require(false, label + " " + e.what());
    }
}

Outcome jrs_invariants() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const Fig1 f;
    const auto dec = decompose(build_policy(f.sol, f.space), f.sol, f.model);
    debug_run(o, f.model, f.space, f.cost, dec, 16.0, 515, "r=16");

    // synthetic harness: redraw from m tokens; server and age rank must both be uniform
    const std::size_t m = 12;
    const int draws = 120000;
    Rng rng(derive_seed(515, 0, 0, Stream::Tokens));
    infinite_sim::TokenPool pool;
    std::vector<std::uint64_t> age(m);
    std::uint64_t stamp = 0;
    for (std::uint32_t s = 0; s < m; ++s) {
        pool.add(s);
        age[s] = stamp++;
    }
    std::vector<double> by_server(m, 0.0), by_rank(m, 0.0);
    for (int d = 0; d < draws; ++d) {
        const std::uint32_t s = pool.take(rng);
        std::size_t rank = 0;
        for (std::uint32_t q = 0; q < m; ++q) {
            if (age[q] < age[s]) ++rank;
        }
        by_server[s] += 1.0;
        by_rank[rank] += 1.0;
        pool.add(s);
        age[s] = stamp++;
    }
    const double crit = boost::math::quantile(boost::math::chi_squared(static_cast<double>(m - 1)), 0.99);
    auto chi2 = [&](const std::vector<double>& obs) {
        const double e = static_cast<double>(draws) / static_cast<double>(m);
        double x = 0.0;
        for (double v : obs) x += (v - e) * (v - e) / e;
        return x;
    };
    o.require(chi2(by_server) < crit, "chi2 by server " + num(chi2(by_server)) + " < " + num(crit));
    o.require(chi2(by_rank) < crit, "chi2 by age " + num(chi2(by_rank)) + " < " + num(crit));
    const double t = elapsed_since(t0);
    o.detail += "; runtime " + num(t) + " s";
    return o;
}

// ---- 6 ----------------------------------------------------------------------
Outcome scaling_sweep() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    auto c = ex::parse_config(R"({
      "model": {"phases": 2, "internal_rates": [[0, 1], [1, 0]], "departure_rates": [1, 2], "lambda": [1, 1]},
      "kmax": 3,
      "cost": {"type": "overcommit", "weights": [[1, 2]], "capacity": [3]},
      "epsilon": 0.1,
      "r_values": [4, 16, 64, 256],
      "horizon_events": 1000000,
      "warmup_fraction": 0.1,
      "replications": 5,
      "master_seed": 20240601
    })");
    const fs::path dir = fs::temp_directory_path() / "sbp_acceptance_sweep";
    const std::size_t workers = std::max(4u, std::thread::hardware_concurrency());
    const auto out = ex::cmd_simulate(c, dir, {workers, false});

    // every replication must have at least 1e6 post-warmup events (column 9 of the data rows)
    std::size_t min_events = SIZE_MAX;
    {
        std::istringstream in(out.csv);
        for (std::string line; std::getline(in, line);) {
            if (line.empty() || line[0] == '#' || line[0] == 'r' || line.find(",all,") != std::string::npos) continue;
            std::istringstream cells(line);
            std::string cell;
            for (int col = 0; col < 9; ++col) std::getline(cells, cell, ',');
            min_events = std::min<std::size_t>(min_events, std::stoull(cell));
        }
    }
    o.require(min_events >= 1000000, "min events per replication " + std::to_string(min_events));

    const auto& fit = out.fit;
    const double slope = fit["slope"].get<double>();
    o.require(slope >= 0.3 && slope <= 0.7, "(a) gap slope " + num(slope) + " CI [" +
                                                num(fit["slope_ci"][0].get<double>()) + ", " +
                                                num(fit["slope_ci"][1].get<double>()) + "]");

    const double eps = c.epsilon;
    double c256 = NAN;
    for (const auto& p : fit["points"]) {
        if (p["r"].get<double>() == 256.0 && !p["c_hat"].is_null()) c256 = p["c_hat"].get<double>();
    }
    o.require(std::isfinite(fit["cost_excess_c"].get<double>()) && c256 <= 1.2 * eps,
              "(b) fitted c " + num(fit["cost_excess_c"].get<double>()) + ", C_hat(256) " + num(c256) +
                  " <= " + num(1.2 * eps));

    auto spread = [&](const char* key) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& p : fit["points"]) {
            lo = std::min(lo, p[key].get<double>());
            hi = std::max(hi, p[key].get<double>());
        }
        return std::make_pair(hi / lo, std::make_pair(lo, hi));
    };
    const auto [vr, vrange] = spread("virtual_over_sqrt_r");
    const auto [br, brange] = spread("backup_over_sqrt_r");
    o.require(vr < 3.0, "(c) virtual/sqrt(r) in [" + num(vrange.first) + ", " + num(vrange.second) + "], factor " +
                            num(vr));
    o.require(br < 3.0, "(c) backup/sqrt(r) in [" + num(brange.first) + ", " + num(brange.second) + "], factor " +
                            num(br));
    const double t = elapsed_since(t0);
    o.require(t < 900.0, "runtime " + num(t) + " s on " + std::to_string(workers) + " workers");
    return o;
}

// ---- 7 ----------------------------------------------------------------------
Outcome decomposition_identities() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    // two rest states (2,0) and (0,2), each departure refilled at once
    const JobModel m({{0, 0}, {0, 0}}, {1, 1}, {0.6, 1.4});
    const ConfigSpace s(2, 2);
    const CostFn h = CostFn::from_table(s, {0, 0, 0, 0.5, 1, 0.25});
    std::vector<double> pi(s.size(), 0.0);
    std::vector<std::vector<double>> u(2, std::vector<double>(s.size(), 0.0));
    pi[s.index_of({2, 0})] = 0.3;
    pi[s.index_of({0, 2})] = 0.7;
    u[0][s.index_of({1, 0})] = 0.6;
    u[1][s.index_of({0, 1})] = 1.4;
    const auto pol = build_policy(s, pi, u);
    const auto dec = decompose(pol, pi, u, m);
    o.require(dec.classes.size() == 2, std::to_string(dec.classes.size()) + " recurrent classes");

    double pi_res = 0.0, phi_res = 0.0;
    for (std::size_t n = 0; n < s.size(); ++n) {
        double mix = 0.0;
        for (std::size_t k = 0; k < dec.classes.size(); ++k) mix += dec.weights[k] * dec.class_pi[k][n];
        pi_res = std::max(pi_res, std::abs(mix - pi[n]));
    }
    for (std::size_t i = 0; i < 2; ++i) {
        double mix = 0.0, total = 0.0;
        for (std::size_t k = 0; k < dec.classes.size(); ++k) {
            mix += dec.weights[k] * ctmc_oracle(pol, m, dec.classes[k]).request_rates[i];
        }
        for (std::size_t n = 0; n < s.size(); ++n) {
            if (!s.is_full(n)) total += u[i][n];
        }
        phi_res = std::max(phi_res, std::abs(mix - total));
    }
    o.require(pi_res <= 1e-8, "pi residual " + num(pi_res));
    o.require(phi_res <= 1e-8, "phi residual " + num(phi_res));
    debug_run(o, m, s, h, dec, 16.0, 717, "multi-pool r=16");
    const double t = elapsed_since(t0);
    o.require(t < 60.0, "runtime " + num(t) + " s");
    return o;
}

// ---- 8 ----------------------------------------------------------------------
Outcome determinism() {
    Outcome o;
    const auto c = ex::parse_config(R"({
      "model": {"phases": 2, "internal_rates": [[0, 1], [1, 0]], "departure_rates": [1, 2], "lambda": [1, 1]},
      "kmax": 3,
      "cost": {"type": "overcommit", "weights": [[1, 2]], "capacity": [3]},
      "epsilon": 0.1,
      "r_values": [4, 16, 64],
      "horizon_events": 100000,
      "replications": 2,
      "master_seed": 88,
      "baselines": ["first-fit", "least-cost"]
    })");
    const fs::path a = fs::temp_directory_path() / "sbp_acceptance_det_a";
    const fs::path b = fs::temp_directory_path() / "sbp_acceptance_det_b";
    (void)ex::cmd_simulate(c, a, {1, false});
    (void)ex::cmd_simulate(c, b, {4, false});
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    const std::string x = slurp(a / "metrics.csv"), y = slurp(b / "metrics.csv");
    o.require(!x.empty() && x == y, "metrics.csv " + std::to_string(x.size()) + " bytes, 1 vs 4 workers identical");
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"LP exactness on the analytic instance", lp_exactness},
        {"LP feasibility residuals", lp_residuals},
        {"oracle equivalence of the single-server policy", oracle_equivalence},
        {"single-server simulation consistency", single_server_simulation},
        {"JRS hard invariants", jrs_invariants},
        {"gap, cost and overflow scaling over r", scaling_sweep},
        {"decomposition identities", decomposition_identities},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (!o.pass) ++failed;
        std::printf("criterion %zu %s: %s (%s)\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}

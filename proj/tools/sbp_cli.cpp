#include <sbp/experiment.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kInfeasible = 3, kBreach = 4 };

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
};

sbp::experiment::ExperimentConfig load(const Common& c) {
    auto cfg = sbp::experiment::load_config(c.config);
    if (c.seed) cfg.master_seed = *c.seed;
    return cfg;
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment description (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", c.out, "output directory")->capture_default_str();
    cmd->add_option("--seed", c.seed, "override master_seed from the config");
}

int run(int argc, char** argv) {
    CLI::App app{"Stochastic bin packing with time-varying item sizes: LP, single-server checks and JRS simulation"};
    app.require_subcommand(1);

    Common lp_opts, verify_opts, sim_opts;
    std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
    bool trace = false;

    auto* lp = app.add_subcommand("lp-solve", "solve the single-server LP and report phi* and N*");
    add_common(lp, lp_opts);
    auto* verify = app.add_subcommand("verify-single", "check the derived single-server policies against the LP point");
    add_common(verify, verify_opts);
    auto* sim = app.add_subcommand("simulate", "simulate JRS and baselines over the r grid");
    add_common(sim, sim_opts);
    sim->add_option("--workers", workers, "parallel simulation runs")->check(CLI::PositiveNumber);
    sim->add_flag("--trace", trace, "write per-run event traces and check invariants after every event");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    namespace ex = sbp::experiment;
    if (*lp) {
        const auto j = ex::cmd_lp_solve(load(lp_opts), lp_opts.out);
        std::printf("phi* = %.12g\n", j["phi_star"].get<double>());
        for (const auto& row : j["nbar_star"]) {
            std::printf("r = %-10g N* = %.6g\n", row["r"].get<double>(), row["nbar_star"].get<double>());
        }
    } else if (*verify) {
        const auto j = ex::cmd_verify_single(load(verify_opts), verify_opts.out);
        std::printf("classes: %zu\n", j["classes"].size());
        std::printf("max TV(oracle, LP point): %.3g\n", j["max_tv_oracle_vs_point"].get<double>());
        std::printf("max request-rate deviation: %.3g\n", j["max_request_rate_deviation"].get<double>());
        for (const auto& c : j["classes"]) {
            std::printf("  weight %.6g  cost %.6g  simulated TV %.3g\n", c["weight"].get<double>(),
                        c["conditional_cost"].get<double>(), c["simulation"]["tv_vs_oracle"].get<double>());
        }
    } else if (*sim) {
        const auto out = ex::cmd_simulate(load(sim_opts), sim_opts.out, {workers, trace});
        for (const auto& p : out.fit["points"]) {
            std::printf("r = %-8g N_hat = %-12.6g comparator = %-12.6g gap = %.4g\n", p["r"].get<double>(),
                        p["n_hat"].get<double>(), p["comparator"].get<double>(), p["gap"].get<double>());
        }
        if (!out.fit["slope"].is_null()) std::printf("gap slope = %.4g\n", out.fit["slope"].get<double>());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const sbp::experiment::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfig;
    } catch (const sbp::DegeneratePolicy& e) {
        std::cerr << "error: degenerate policy: " << e.what() << "\n";
        return kConfig;
    } catch (const sbp::LpInfeasible& e) {
        std::cerr << "error: LP infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const sbp::InvariantBreach& e) {
        std::cerr << "error: invariant breach: " << e.what() << "\n";
        return kBreach;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "cps/complexity.hpp"
#include "cps/harness.hpp"
#include "cps/instances.hpp"
#include "cps/json_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string dir_of(const std::string& path) {
    fs::path p(path);
    return p.has_parent_path() ? p.parent_path().string() : std::string(".");
}

// Tuning inputs for the regret bound: defaults per the harness conventions
// (eta = 0.4/b^2, lambda = sqrt(T kappa / (b^2 dc)), dc from the tabular
// linear bound with d = |X||A|, kappa at scale b/T^beta).
json bound_report(const cps::ExperimentConfig& cfg) {
    json out;
    const double b = cps::boundedness_b(cfg.cls);
    const double eta = (cfg.agent.eta > 0.0) ? cfg.agent.eta : 0.4 / (b * b);
    const double beta = cfg.agent.beta;
    const int d = cfg.mdp.num_states * cfg.mdp.num_actions;
    const double dc = cps::dc_bound_linear(d, cfg.mdp.horizon, cfg.T);
    out["b"] = b;
    out["eta"] = eta;
    out["beta"] = beta;
    out["dc"] = dc;
    out["dc_source"] = "linear_tabular(d=|X||A|)";
    double eps = b / std::pow(static_cast<double>(cfg.T), beta);
    try {
        double kap = cps::kappa(cfg.cls, eps, cfg.mdp);
        out["kappa"] = kap;
        double lambda = cfg.agent.lambda;
        if (lambda < 0.0) {
            lambda = cps::tuned_lambda(cfg.T, kap, b, dc);
            out["lambda_source"] = "tuned";
        } else {
            out["lambda_source"] = "config";
        }
        if (lambda > 0.0) {
            out["lambda"] = lambda;
            out["value"] = cps::theorem_bound(kap, dc, b, cfg.T, eta, lambda,
                                             cfg.mdp.horizon, beta);
        } else {
            out["value"] = nullptr;
            out["note"] = "lambda = 0: bound undefined";
        }
    } catch (const cps::EmptyCoverSet& e) {
        out["value"] = nullptr;
        out["note"] = std::string("kappa undefined: ") + e.what();
    }
    return out;
}

json complexity_report(const cps::ExperimentConfig& cfg,
                       const cps::ResidualSequenceRecord* residuals) {
    json out;
    const double b = cps::boundedness_b(cfg.cls);
    const double beta = cfg.agent.beta;
    const int d = cfg.mdp.num_states * cfg.mdp.num_actions;
    double eps_grid = b / std::pow(static_cast<double>(cfg.T), beta);
    try {
        out["kappa"] = cps::kappa(cfg.cls, eps_grid, cfg.mdp);
    } catch (const cps::EmptyCoverSet& e) {
        out["kappa"] = nullptr;
        out["kappa_note"] = e.what();
    }
    try {
        out["kappa_eps"] = cps::kappa(cfg.cls, cfg.complexity.epsilon, cfg.mdp);
    } catch (const cps::EmptyCoverSet& e) {
        out["kappa_eps"] = nullptr;
        out["kappa_eps_note"] = e.what();
    }
    json bounds;
    bounds["linear"] = cps::dc_bound_linear(d, cfg.mdp.horizon, cfg.T);
    if (cfg.cls.linear && cfg.cls.linear->link)
        bounds["glm"] = cps::dc_bound_glm(d, cfg.mdp.horizon, cfg.T, cfg.cls.linear->link->k,
                                          cfg.cls.linear->link->K);
    json checks = json::array();
    if (residuals != nullptr && residuals->T > 0) {
        double K = bounds["linear"].get<double>();
        for (double mu : cfg.complexity.mu_list) {
            cps::DcCheck c = cps::dc_inequality_check(*residuals, mu, K);
            checks.push_back(json{{"mu", c.mu},
                                  {"K", c.K},
                                  {"lhs", c.lhs},
                                  {"rhs", c.rhs},
                                  {"satisfied", c.satisfied}});
        }
    }
    out["dc_checks"] = std::move(checks);
    try {
        cps::BeDimResult be = cps::bellman_eluder_dim(cfg.mdp, cfg.cls,
                                                      cfg.complexity.epsilon,
                                                      cfg.complexity.be_mode);
        out["be_dim"] = json{
            {"value", be.value},
            {"mode", be.mode == cps::BeMode::ExactTiny ? "exact_tiny" : "greedy"},
            {"lower_bound_only", be.lower_bound_only}};
        bounds["from_be"] = cps::dc_bound_from_be(be.value, cfg.mdp.horizon, cfg.T,
                                                  cfg.complexity.mu_list.back());
    } catch (const cps::CapExceeded& e) {
        out["be_dim"] = json{{"value", nullptr}, {"note", e.what()}};
    }
    out["bounds"] = std::move(bounds);
    return out;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            long long seed_override, bool quiet) {
    json cfg_json = cps::load_json_file(config_path);
    cps::ExperimentConfig cfg = cps::config_from_json(cfg_json, dir_of(config_path));
    if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
    fs::create_directories(out_dir);

    const std::uint64_t hash = cps::content_hash(cfg_json);
    char hashbuf[32];
    std::snprintf(hashbuf, sizeof hashbuf, "%016llx",
                  static_cast<unsigned long long>(hash));

    auto t0 = std::chrono::steady_clock::now();
    json manifest;
    manifest["config"] = cfg_json;
    manifest["config_hash"] = hashbuf;
    manifest["started_at"] = iso_now();
    json seeds = json::array(), files = json::array();

    cps::AssumptionReport rep = cps::check_assumptions(cfg.mdp, cfg.cls, 1e-9);
    if (!rep.all() && !quiet) {
        std::cerr << "warning: class assumptions violated:" << std::endl;
        for (const auto& v : rep.violations) std::cerr << "  " << v << std::endl;
    }

    const cps::ResidualSequenceRecord* first_residuals = nullptr;
    cps::ResidualSequenceRecord residuals_store;
    for (std::uint64_t seed : cfg.seeds) {
        cps::RunResult res = cps::run_agent(cfg.mdp, cfg.cls, cfg.agent, cfg.T, seed);
        res.ledger.config_hash = hashbuf;
        std::string fname = "regret_" + std::to_string(seed) + ".csv";
        std::ofstream out(fs::path(out_dir) / fname, std::ios::binary);
        out << cps::regret_csv(res.ledger);
        seeds.push_back(seed);
        files.push_back(fname);
        if (!quiet)
            std::cerr << "seed " << seed << ": cumulative regret "
                      << res.ledger.cum_regret.back() << std::endl;
        if (first_residuals == nullptr && res.residuals.T > 0) {
            residuals_store = std::move(res.residuals);
            first_residuals = &residuals_store;
        }
    }
    manifest["seeds"] = std::move(seeds);
    manifest["outputs"] = std::move(files);
    manifest["agent"] = cps::agent_type_name(cfg.agent.type);
    manifest["assumptions_ok"] = rep.all();
    manifest["theorem_bound"] = bound_report(cfg);
    if (cfg.complexity.enabled)
        manifest["complexity"] = complexity_report(cfg, first_residuals);
    manifest["finished_at"] = iso_now();
    manifest["wall_clock_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream mout(fs::path(out_dir) / "manifest.json", std::ios::binary);
    mout << manifest.dump(2) << "\n";
    return 0;
}

int cmd_check(const std::string& config_path) {
    json cfg_json = cps::load_json_file(config_path);
    cps::ExperimentConfig cfg = cps::config_from_json(cfg_json, dir_of(config_path));
    cps::AssumptionReport rep = cps::check_assumptions(cfg.mdp, cfg.cls, 1e-9);
    json out;
    out["realizable"] = rep.realizable;
    out["bounded"] = rep.bounded;
    out["complete"] = rep.complete;
    out["realizable_witness"] = rep.realizable_witness;
    out["violations"] = rep.violations;
    out["b"] = cps::boundedness_b(cfg.cls);
    out["tuple_count"] = cfg.cls.tuple_count();
    std::cout << out.dump(2) << std::endl;
    return 0;
}

int cmd_complexity(const std::string& config_path, bool quiet) {
    json cfg_json = cps::load_json_file(config_path);
    cps::ExperimentConfig cfg = cps::config_from_json(cfg_json, dir_of(config_path));
    if (!cfg.complexity.enabled) cfg.complexity = cps::ComplexityConfig{true, 0.0, {0.1, 0.5, 1.0},
                                                                        cps::BeMode::ExactTiny};
    // dc checks need an observed sequence; run the first seed
    if (!quiet)
        std::cerr << "running " << cfg.T << " episodes (seed " << cfg.seeds.front()
                  << ") for the decoupling check" << std::endl;
    cps::RunResult res = cps::run_agent(cfg.mdp, cfg.cls, cfg.agent, cfg.T, cfg.seeds.front());
    json out = complexity_report(cfg, res.residuals.T > 0 ? &res.residuals : nullptr);
    std::cout << out.dump(2) << std::endl;
    return 0;
}

int cmd_gen(const std::string& name, int states, int actions, int horizon, int distractors,
            int dim, int grid, std::uint64_t seed) {
    json out;
    if (name == "chain") {
        cps::TabularMdp mdp = cps::make_chain_mdp(states, horizon);
        cps::QFunctionClass cls = cps::make_closure_class(mdp, distractors, seed);
        out["mdp"] = cps::mdp_to_json(mdp);
        out["class"] = cps::class_to_json(cls);
    } else if (name == "random_tabular") {
        cps::TabularMdp mdp = cps::make_random_mdp(states, actions, horizon, seed);
        cps::QFunctionClass cls = cps::make_closure_class(mdp, distractors, seed);
        out["mdp"] = cps::mdp_to_json(mdp);
        out["class"] = cps::class_to_json(cls);
    } else if (name == "linear_grid") {
        cps::LinearGridInstance inst =
            cps::make_linear_grid(dim, grid, horizon, states, actions, seed);
        out["mdp"] = cps::mdp_to_json(inst.mdp);
        out["class"] = cps::class_to_json(inst.cls);
    } else {
        throw cps::ValidationError("--name must be chain, random_tabular, or linear_grid");
    }
    std::cout << out.dump(2) << std::endl;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional posterior sampling simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    long long seed_override = -1;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "execute an experiment from a config file");
    run->add_option("--config", config_path, "config JSON")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed-override", seed_override, "replace the config seed list");
    run->add_flag("--quiet", quiet, "suppress progress output");

    CLI::App* check = app.add_subcommand("check", "assumption diagnostics for an instance");
    check->add_option("--config", config_path, "config JSON")->required();

    CLI::App* cx = app.add_subcommand("complexity", "emit a complexity report");
    cx->add_option("--config", config_path, "config JSON")->required();
    cx->add_flag("--quiet", quiet, "suppress progress output");

    std::string gen_name;
    int states = 5, actions = 2, horizon = 3, distractors = 3, dim = 2, grid = 5;
    std::uint64_t gen_seed = 1;
    CLI::App* gen = app.add_subcommand("gen", "emit a named benchmark instance");
    gen->add_option("--name", gen_name, "chain | random_tabular | linear_grid")->required();
    gen->add_option("--states", states, "number of states");
    gen->add_option("--actions", actions, "number of actions");
    gen->add_option("--horizon", horizon, "episode length");
    gen->add_option("--distractors", distractors, "extra members per level");
    gen->add_option("--dim", dim, "feature dimension (linear_grid)");
    gen->add_option("--grid", grid, "grid points per coordinate (linear_grid)");
    gen->add_option("--seed", gen_seed, "generator seed");

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path, out_dir, seed_override, quiet);
        if (check->parsed()) return cmd_check(config_path);
        if (cx->parsed()) return cmd_complexity(config_path, quiet);
        if (gen->parsed())
            return cmd_gen(gen_name, states, actions, horizon, distractors, dim, grid,
                           gen_seed);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const cps::ValidationError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << std::endl;
        return 2;
    }
}

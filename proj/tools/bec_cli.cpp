// bec: command-line front end for the centered TD library.
//
//   bec fixpoint <env | env.json> [--config file]
//   bec run <config.json> [-o trace.csv]
//   bec sweep <config.json>
//   bec lemma [--a .. --gamma ..] | [--grid N]
//   bec report <sweep_dir>...
//
// Exit codes: 0 success, 1 runtime or numeric failure, 2 usage or config error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bec/bec.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
    std::string out_dir = ".";
};

json to_json(const bec::Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json to_json(const bec::Matrix& m) {
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(bec::Vector(m.row(i).transpose())));
    return out;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

bec::EnvironmentSpec resolve_environment(const std::string& name) {
    if (auto spec = bec::builtin_environment(name)) return *spec;
    if (fs::exists(name)) return bec::load_environment(name);
    throw bec::ConfigError("environment", "unknown environment '" + name + "' (expected boyan, two-state, baird7 or a file)");
}

bec::LoadedConfig load_with_overrides(const std::string& path, const GlobalOptions& g) {
    bec::LoadedConfig cfg = bec::load_config(path);
    if (g.seed) cfg.experiment.seed = *g.seed;
    return cfg;
}

int cmd_fixpoint(const std::string& env_name, const std::string& config_path) {
    const bec::EnvironmentSpec env = config_path.empty() ? resolve_environment(env_name)
                                                         : bec::load_config(config_path).experiment.environment;
    const bec::AnalyticSystem sys = bec::analytic_system(env.model, env.features);
    const bec::FixpointSolution sol = bec::fixpoint_solve(sys);
    const json out = {{"environment", env.name},
                      {"d_mu", to_json(sys.d_mu.vector())},
                      {"A", to_json(sys.a_matrix)},
                      {"b", to_json(sys.b_vector)},
                      {"C", to_json(sys.c_matrix)},
                      {"omega_star", {{"slope", to_json(sys.omega_star.slope)}, {"offset", sys.omega_star.offset}}},
                      {"theta_star", to_json(sol.theta_star)},
                      {"singular", sol.singular},
                      {"condition", finite_or_null(sol.condition)},
                      {"residual", sol.residual},
                      {"symmetrized_min_eigenvalue", bec::symmetrized_min_eigenvalue(sys.a_matrix)}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& output, const GlobalOptions& g) {
    const bec::LoadedConfig cfg = load_with_overrides(config_path, g);
    const auto traces = bec::run_all(cfg.experiment, g.threads);
    if (output == "-") {
        bec::write_trace_csv(std::cout, traces);
        return 0;
    }
    const fs::path file = output.empty() ? fs::path(g.out_dir) / "trace.csv" : fs::path(output);
    if (file.has_parent_path()) fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary);
    bec::write_trace_csv(out, traces);
    if (!out) throw std::runtime_error("cannot write " + file.string());
    std::cout << file.string() << '\n';
    return 0;
}

int cmd_sweep(const std::string& config_path, const GlobalOptions& g) {
    const bec::LoadedConfig cfg = load_with_overrides(config_path, g);
    const bec::SweepGrids grids = cfg.grids ? *cfg.grids : bec::benchmark_grids(cfg.experiment.environment.name);
    const bec::SweepResult result = bec::sweep(cfg.experiment, grids, g.threads);
    for (const auto& n : result.notices) std::cerr << "notice: " << n << '\n';
    bec::write_sweep(g.out_dir, cfg.experiment, result);
    std::cout << result.cells.size() << " cells written to " << g.out_dir << '\n';
    if (result.best) {
        const auto& b = result.cells[*result.best];
        std::cout << "best: alpha=" << bec::format_double(b.alpha) << " beta=" << bec::format_double(b.beta)
                  << " zeta=" << bec::format_double(b.zeta) << " final_mean_rmscbe=" << bec::format_double(b.final_mean)
                  << '\n';
    } else {
        std::cout << "best: none (every cell diverged)\n";
    }
    return 0;
}

int cmd_lemma(const bec::TwoStateParams& p, std::uint64_t grid, const GlobalOptions& g) {
    if (grid == 0) {
        bec::validate(p);
        if (p.m == p.n) {
            const json out = {{"closed_form", 0.0}, {"matrix_form", 0.0}, {"abs_difference", 0.0},
                              {"verdict", "degenerate (m=n)"}};
            std::cout << out.dump(2) << '\n';
            return 0;
        }
        const bec::LemmaValues v = bec::lemma_two_state(p);
        const json out = {{"closed_form", v.closed_form},
                          {"matrix_form", v.matrix_form},
                          {"abs_difference", std::abs(v.closed_form - v.matrix_form)},
                          {"verdict", v.closed_form > 0.0 && v.matrix_form > 0.0 ? "positive" : "not positive"}};
        std::cout << out.dump(2) << '\n';
        return 0;
    }
    const std::uint64_t seed = g.seed.value_or(0);
    bec::RngStream rng(seed);
    double max_diff = 0.0;
    double min_value = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < grid; ++i) {
        const bec::LemmaValues v = bec::lemma_two_state(bec::random_two_state_params(rng));
        max_diff = std::max(max_diff, std::abs(v.closed_form - v.matrix_form));
        min_value = std::min({min_value, v.closed_form, v.matrix_form});
    }
    const json out = {{"samples", grid},
                      {"seed", seed},
                      {"max_abs_difference", max_diff},
                      {"min_value", min_value},
                      {"verdict", min_value > 0.0 ? "positive" : "not positive"}};
    std::cout << out.dump(2) << '\n';
    return 0;
}

int cmd_report(const std::vector<std::string>& dirs, const GlobalOptions& g) {
    std::vector<fs::path> roots(dirs.begin(), dirs.end());
    const bec::ReportOutcome r = bec::build_report(roots, g.out_dir);
    for (const auto& m : r.missing) std::cerr << "missing: " << m << '\n';
    for (const auto& p : r.plots) std::cout << p.string() << '\n';
    std::cout << r.tidy_csv.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Centered temporal-difference learning: fixpoints, runs, sweeps and reports"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value, "Override the random seed");
    app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();

    std::string env_name, fix_config;
    auto* fixpoint = app.add_subcommand("fixpoint", "Print the analytic system and fixpoint as JSON");
    fixpoint->add_option("env", env_name, "boyan, two-state, baird7, or a custom MDP file");
    fixpoint->add_option("--config", fix_config, "Take the environment from a config file");

    std::string run_config, run_output;
    auto* run = app.add_subcommand("run", "Run n_runs runs and write the trace CSV");
    run->add_option("config", run_config, "Config file")->required();
    run->add_option("-o,--output", run_output, "Output CSV (default <out-dir>/trace.csv, '-' for stdout)");

    std::string sweep_config;
    auto* sweep = app.add_subcommand("sweep", "Grid sweep: one CSV per cell plus summary.json");
    sweep->add_option("config", sweep_config, "Config file")->required();

    bec::TwoStateParams lp;
    std::uint64_t grid = 0;
    auto* lemma = app.add_subcommand("lemma", "Two-state definiteness check");
    lemma->add_option("--a", lp.a)->capture_default_str();
    lemma->add_option("--b", lp.b)->capture_default_str();
    lemma->add_option("--x", lp.x)->capture_default_str();
    lemma->add_option("--y", lp.y)->capture_default_str();
    lemma->add_option("--m", lp.m)->capture_default_str();
    lemma->add_option("--n", lp.n)->capture_default_str();
    lemma->add_option("--gamma", lp.gamma)->capture_default_str();
    lemma->add_option("--grid", grid, "Sample this many random parameter tuples instead");

    std::vector<std::string> report_dirs;
    auto* report = app.add_subcommand("report", "SVG plots and a tidy CSV from sweep outputs");
    report->add_option("dirs", report_dirs, "Sweep output directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }
    if (seed_opt->count() > 0) g.seed = seed_value;

    try {
        if (*fixpoint) {
            if (env_name.empty() == fix_config.empty()) {
                std::cerr << "fixpoint: give exactly one of an environment or --config\n";
                return kExitUsage;
            }
            return cmd_fixpoint(env_name, fix_config);
        }
        if (*run) return cmd_run(run_config, run_output, g);
        if (*sweep) return cmd_sweep(sweep_config, g);
        if (*lemma) return cmd_lemma(lp, grid, g);
        if (*report) return cmd_report(report_dirs, g);
    } catch (const bec::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

#include "appropo/appropo.hpp"
#include "appropo/env.hpp"
#include "appropo/experiment.hpp"
#include "appropo/mdp_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace appropo;

namespace {

int run_config(const std::string& config_path, const std::string& out_flag, std::optional<std::uint64_t> seed,
               std::optional<std::size_t> threads, bool force_cache) {
    ExperimentConfig cfg = read_config_file(config_path);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.oracle.threads = *threads;
    if (force_cache) cfg.use_cache = true;
    const fs::path base = fs::path(config_path).parent_path();
    std::string out = out_flag;
    if (out.empty()) out = fs::path(cfg.output_dir).is_relative() ? (base / cfg.output_dir).string() : cfg.output_dir;
    const ExperimentResult res = run_experiment(cfg, out, base.empty() ? "." : base.string());
    std::cout << "outcome: " << res.summary.value("outcome", "?") << "\n";
    if (res.summary.contains("final_distance") && !res.summary["final_distance"].is_null())
        std::cout << "final_distance: " << format_double(res.summary["final_distance"].get<double>()) << "\n";
    if (res.summary.contains("distance_bound"))
        std::cout << "distance_bound: " << format_double(res.summary["distance_bound"].get<double>()) << "\n";
    if (res.summary.contains("witness"))
        std::cout << "infeasible at iteration " << res.summary["witness"]["iteration"].get<std::size_t>() << "\n";
    if (res.summary.contains("threshold"))
        std::cout << "threshold: " << format_double(res.summary["threshold"].get<double>()) << "\n";
    std::cout << "artifacts: " << out << "\n";
    return res.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approachability-based constrained RL on tabular vector-measurement MDPs"};
    app.require_subcommand(1);

    std::string config, out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;

    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "Output directory (overrides output_dir)");
    run->add_option("--seed", seed, "Seed (overrides the config seed)");
    run->add_option("--threads", threads, "Worker threads for sampled estimation");

    auto* cache_dump = app.add_subcommand("cache-dump", "Run a config with the policy cache on and write cache.csv");
    cache_dump->add_option("--config", config, "Experiment config file")->required()->check(CLI::ExistingFile);
    cache_dump->add_option("--out", out, "Output directory (overrides output_dir)");
    cache_dump->add_option("--seed", seed, "Seed (overrides the config seed)");
    cache_dump->add_option("--threads", threads, "Worker threads for sampled estimation");

    std::string env_name = "gridworld";
    RandomMdpSpec rspec;
    GridworldSpec gspec;
    double max_unsafe = 1.0, min_visit = 0.0, max_visit = 10.0;
    std::uint64_t env_seed = 0;
    auto* gen = app.add_subcommand("gen-env", "Generate a benchmark MDP file and target presets");
    gen->add_option("--name", env_name, "random or gridworld")->check(CLI::IsMember({"random", "gridworld"}));
    gen->add_option("--seed", env_seed, "Generator seed");
    gen->add_option("--out", out, "Output directory")->required();
    gen->add_option("--states", rspec.states, "random: number of states");
    gen->add_option("--actions", rspec.actions, "random: number of actions");
    gen->add_option("--dim", rspec.dim, "random: measurement dimension");
    gen->add_flag("--noise", rspec.noise, "random: two-point measurement noise");
    gen->add_option("--width", gspec.width, "gridworld: width");
    gen->add_option("--height", gspec.height, "gridworld: height");
    gen->add_option("--slip", gspec.slip, "gridworld: slip probability");
    double gamma = 0.9;
    gen->add_option("--gamma", gamma, "Discount factor");
    gen->add_option("--max-unsafe", max_unsafe, "gridworld safety preset: cap on long-term unsafe value");
    gen->add_option("--min-visit", min_visit, "gridworld visitation preset: lower bound per cell");
    gen->add_option("--max-visit", max_visit, "gridworld visitation preset: upper bound per cell");

    double bb = 1.0, bgamma = 0.9, eps0 = 0.0, eps1 = 0.0;
    std::size_t rounds = 1000;
    std::optional<double> kappa, delta;
    auto* bounds = app.add_subcommand("bounds", "Print the guaranteed distance excess");
    bounds->add_option("--B", bb, "Measurement norm bound")->required();
    bounds->add_option("--gamma", bgamma, "Discount factor")->required();
    bounds->add_option("--eps0", eps0, "Best-response suboptimality");
    bounds->add_option("--eps1", eps1, "Estimation error");
    bounds->add_option("--T", rounds, "Rounds")->required();
    bounds->add_option("--kappa", kappa, "Lifting scale (with --delta)");
    bounds->add_option("--delta", delta, "Lifting distortion (with --kappa)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config_error;
    }

    try {
        if (run->parsed()) return run_config(config, out, seed, threads, false);
        if (cache_dump->parsed()) return run_config(config, out, seed, threads, true);
        if (bounds->parsed()) {
            std::cout << format_double(distance_bound(bb, bgamma, eps0, eps1, rounds, kappa, delta)) << "\n";
            return exit_ok;
        }
        // gen-env
        fs::create_directories(out);
        nlohmann::ordered_json presets;
        VectorMDP mdp = [&] {
            if (env_name == "random") {
                rspec.gamma = gamma;
                return random_mdp(env_seed, rspec);
            }
            gspec.gamma = gamma;
            Gridworld g = gridworld(gspec);
            presets["safety"] = {{"kind", "safety"}, {"max_unsafe", max_unsafe}};
            presets["visitation_box"] = {{"kind", "visitation_box"}, {"min_visit", min_visit}, {"max_visit", max_visit}};
            presets["reward_coord"] = Gridworld::reward_coord;
            presets["unsafe_coord"] = Gridworld::unsafe_coord;
            return g.mdp;
        }();
        presets["measurement_dim"] = mdp.dim();
        presets["bound_B"] = mdp.bound();
        {
            std::ofstream f(fs::path(out) / "env.mdp", std::ios::binary);
            f << "# generated: " << env_name << " seed " << env_seed << "\n";
            write_mdp(f, mdp);
        }
        std::ofstream(fs::path(out) / "presets.json", std::ios::binary) << presets.dump(2) << "\n";
        std::cout << "states: " << mdp.num_states() << " actions: " << mdp.num_actions() << " dim: " << mdp.dim()
                  << " B: " << format_double(mdp.bound()) << "\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const ParseError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
}

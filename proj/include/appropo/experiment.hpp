#pragma once

#include "appropo/appropo.hpp"
#include "appropo/env.hpp"
#include "appropo/oracles.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace appropo {

/// Invalid experiment configuration; the message names the file and the offending key or line.
class ConfigError : public Error {
public:
    using Error::Error;
};

struct MdpSource {
    /// "inline", "file", "random" or "gridworld".
    std::string kind = "random";
    std::string text;
    std::string path;
    RandomMdpSpec random;
    GridworldSpec grid;
    /// Keep only these measurement coordinates (all when empty).
    std::vector<std::size_t> coordinates;

    bool operator==(const MdpSource&) const = default;
};

struct TargetSpec {
    /// box, ball, polytope, cone, polyhedral_cone, nonpositive_orthant,
    /// whole_space, safety (gridworld) or visitation_box (gridworld).
    std::string kind = "whole_space";
    std::size_t dim = 0;  // for nonpositive_orthant / whole_space; 0 = measurement dimension
    std::vector<double> lo, hi;
    std::vector<double> center;
    double radius = 0.0;
    std::vector<std::vector<double>> a;
    std::vector<double> b;
    std::vector<std::vector<double>> generators;
    double max_unsafe = 0.0;
    double min_visit = 0.0;
    double max_visit = 0.0;

    bool operator==(const TargetSpec&) const = default;
};

struct GameSpec {
    std::vector<std::vector<double>> m;
    std::vector<double> a, b;
    double c = 0.0;
    /// "box" or "simplex" for each player.
    std::string lambda_kind = "box";
    std::vector<double> lambda_lo, lambda_hi;
    std::size_t lambda_dim = 0;
    std::string u_kind = "box";
    std::vector<double> u_lo, u_hi;
    std::size_t u_dim = 0;

    bool operator==(const GameSpec&) const = default;
};

struct ExperimentConfig {
    /// appropo, feasibility, general, maximize_reward or solve_game.
    std::string algorithm = "appropo";
    std::optional<MdpSource> mdp;
    std::optional<TargetSpec> target;
    std::optional<GameSpec> game;
    OracleConfig oracle;
    std::size_t rounds = 1000;
    std::optional<double> eta;
    double delta = 0.5;
    std::optional<double> kappa;
    /// distance or feasibility (general only).
    std::string variant = "distance";
    bool use_cache = false;
    std::size_t cache_seed_policies = 5;
    std::optional<double> cache_threshold;
    std::optional<double> stop_at_distance;
    std::size_t reward_coord = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t steps = 8;
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates a configuration; `source` is used in error messages.
ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>");
ExperimentConfig read_config_file(const std::string& path);
nlohmann::ordered_json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::ordered_json& j, const std::string& source = "<config>");

enum ExitCode : int {
    exit_ok = 0,
    exit_error = 1,
    exit_infeasible = 2,
    exit_empirically_infeasible = 3,
    exit_config_error = 4,
};

struct ExperimentResult {
    int exit_code = exit_ok;
    nlohmann::ordered_json summary;
};

VectorMDP build_mdp(const MdpSource& src, std::uint64_t seed, const std::string& base_dir = ".");
TargetSet build_target(const TargetSpec& spec, const MdpSource* src, std::size_t dim);

/**
 * Runs the configured algorithm and writes trace.csv, summary.json and
 * distance.svg (plus cache.csv when a cache was used) into `out_dir`.
 * Relative MDP file paths resolve against `base_dir`.
 */
ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                 const std::string& base_dir = ".");

}  // namespace appropo

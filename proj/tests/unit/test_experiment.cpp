#include "appropo/experiment.hpp"
#include "appropo/trace_io.hpp"
#include "fixtures.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace appropo;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("appropo_test_experiment_" + name);
    fs::remove_all(p);
    return p;
}

std::string config_error(const std::string& text) {
    try {
        parse_config(text, "cfg.json");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

const char* kWholeSpace = R"({
  "algorithm": "appropo",
  "mdp": {"kind": "file", "path": "two_action.mdp"},
  "target": {"kind": "whole_space"},
  "rounds": 3
})";

}  // namespace

TEST_CASE("config round trip") {
    const std::vector<std::string> configs = {
        kWholeSpace,
        R"({"algorithm": "feasibility", "mdp": {"kind": "random", "states": 4, "actions": 2, "dim": 3, "gamma": 0.8,
            "noise": true}, "target": {"kind": "cone", "generators": [[1, 0, 0], [0, -1, 0]]},
            "oracle": {"mode": "sampled", "eps1": 0.1, "trailing_n": 7, "threads": 2}, "seed": 99, "use_cache": true,
            "cache_threshold": 0.2})",
        R"({"algorithm": "general", "mdp": {"kind": "gridworld", "width": 4, "height": 2, "slip": 0.1,
            "start": [0, 1], "goal": [3, 1], "unsafe": [[1, 1]], "coordinates": [0, 1]},
            "target": {"kind": "box", "lo": [0, null], "hi": [5, 1]}, "delta": 0.25, "kappa": 3.5,
            "variant": "feasibility", "stop_at_distance": 0.01})",
        R"({"algorithm": "maximize_reward", "mdp": {"kind": "gridworld"}, "target": {"kind": "safety",
            "max_unsafe": 0.5}, "lo": -1, "hi": 2, "steps": 3, "reward_coord": 0})",
        R"({"algorithm": "solve_game", "game": {"m": [[1, 2], [3, 4]], "a": [1, 0], "lambda_kind": "simplex",
            "u_kind": "box", "u_lo": [0, 0], "u_hi": [1, 1]}, "rounds": 10, "eta": 0.5})",
        R"({"algorithm": "appropo", "mdp": {"kind": "inline", "text": "[states]\n1\n"},
            "target": {"kind": "polytope", "a": [[1, 1]], "b": [1], "lo": [0, 0], "hi": [1, 1]}})",
    };
    for (const auto& text : configs) {
        const ExperimentConfig c = parse_config(text, "cfg");
        const std::string dumped = config_to_json(c).dump();
        const ExperimentConfig back = parse_config(dumped, "dumped");
        CHECK(back == c);
        CHECK(config_to_json(back).dump() == dumped);
    }
}

TEST_CASE("config errors name the location") {
    CHECK(config_error(R"({"algorithm": "appropo", "bogus": 1})").find("cfg.json: /bogus: unknown key") == 0);
    CHECK(config_error(R"({"algorithm": "appropo", "mdp": {"kind": "random", "states": -1}})").find("/mdp/states") !=
          std::string::npos);
    CHECK(config_error(R"({"algorithm": "nope"})").find("/algorithm") != std::string::npos);
    CHECK(config_error(R"({"algorithm": "appropo"})").find("/mdp") != std::string::npos);
    CHECK(config_error("{\n  \"algorithm\": \"appropo\",\n  \"rounds\": ,\n}").find("cfg.json:3:") == 0);
    CHECK(config_error(R"({"algorithm": "appropo", "mdp": {"kind": "gridworld"}, "target": {"kind": "cube"}})")
              .find("/target/kind") != std::string::npos);
    CHECK(config_error(R"({"algorithm": "appropo", "mdp": {"kind": "random"}, "target": {"kind": "box"},
                           "oracle": {"mode": "fast"}})")
              .find("/oracle/mode") != std::string::npos);
    CHECK_THROWS_AS(read_config_file("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("build MDP and target") {
    MdpSource src;
    src.kind = "file";
    src.path = "two_action.mdp";
    const VectorMDP mdp = build_mdp(src, 0, TEST_DATA_DIR);
    CHECK(mdp.num_actions() == 2);
    src.coordinates = {1};
    CHECK(build_mdp(src, 0, TEST_DATA_DIR).dim() == 1);
    src.coordinates = {5};
    CHECK_THROWS_AS(build_mdp(src, 0, TEST_DATA_DIR), ConfigError);
    src.path = "missing.mdp";
    src.coordinates.clear();
    CHECK_THROWS_AS(build_mdp(src, 0, TEST_DATA_DIR), ConfigError);

    TargetSpec t;
    t.kind = "box";
    t.lo = {0};
    t.hi = {1, 2};
    CHECK_THROWS_AS(build_target(t, nullptr, 2), ConfigError);
    t.kind = "safety";
    CHECK_THROWS_AS(build_target(t, nullptr, 11), ConfigError);
    MdpSource grid;
    grid.kind = "gridworld";
    t.max_unsafe = 1.0;
    CHECK(build_target(t, &grid, 11).dim() == 11);
}

TEST_CASE("trace schema matches the golden file") {
    const fs::path out = scratch("golden");
    const ExperimentConfig cfg = parse_config(kWholeSpace);
    const ExperimentResult r = run_experiment(cfg, out.string(), TEST_DATA_DIR);
    CHECK(r.exit_code == exit_ok);
    CHECK(slurp(out / "trace.csv") == slurp(fs::path(TEST_DATA_DIR) / "golden_trace.csv"));
    CHECK(fs::exists(out / "summary.json"));
    CHECK(fs::exists(out / "distance.svg"));
    CHECK(r.summary["final_distance"].get<double>() == 0.0);
    CHECK(trace_columns(1, 2) ==
          std::vector<std::string>{"t", "lambda_0", "zhat_0", "zhat_1", "loss", "running_distance", "cache_hit"});
}

TEST_CASE("infeasible run exits with the infeasible code") {
    const fs::path out = scratch("infeasible");
    const ExperimentConfig cfg = parse_config(R"({
      "algorithm": "feasibility",
      "mdp": {"kind": "inline", "text": "[states]\n1\n[actions]\n1\n[beta]\n1\n[P]\n0 0 1\n[Z]\n0 0 1\n[gamma]\n0.9\n"},
      "target": {"kind": "nonpositive_orthant"},
      "rounds": 100
    })");
    const ExperimentResult r = run_experiment(cfg, out.string());
    CHECK(r.exit_code == exit_infeasible);
    CHECK(r.summary["outcome"] == "infeasible");
    CHECK(r.summary["witness"]["iteration"].get<std::size_t>() <= 5);
    const auto summary = nlohmann::json::parse(slurp(out / "summary.json"));
    CHECK(summary["exit_code"] == 2);
}

TEST_CASE("identical config and seed give byte-identical traces") {
    const std::string text = R"({
      "algorithm": "appropo",
      "mdp": {"kind": "random", "states": 5, "actions": 3, "dim": 2, "noise": true},
      "target": {"kind": "nonpositive_orthant"},
      "oracle": {"mode": "sampled", "max_episodes": 30, "estimate_rollouts": 200},
      "rounds": 15,
      "use_cache": true,
      "seed": 5
    })";
    const ExperimentConfig cfg = parse_config(text);
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    run_experiment(cfg, a.string());
    ExperimentConfig threaded = cfg;
    threaded.oracle.threads = 3;
    run_experiment(threaded, b.string());
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(slurp(a / "cache.csv") == slurp(b / "cache.csv"));
    ExperimentConfig other = cfg;
    other.seed = 6;
    const fs::path c = scratch("det_c");
    run_experiment(other, c.string());
    CHECK(slurp(a / "trace.csv") != slurp(c / "trace.csv"));
}

TEST_CASE("every algorithm runs from a config") {
    const std::vector<std::pair<std::string, int>> cases = {
        {R"({"algorithm": "general", "mdp": {"kind": "gridworld"}, "target": {"kind": "safety", "max_unsafe": 1.0},
             "rounds": 50})", exit_ok},
        {R"({"algorithm": "maximize_reward", "mdp": {"kind": "gridworld", "coordinates": [0, 1]},
             "target": {"kind": "box", "lo": [0, 0], "hi": [10, 1]}, "lo": 0, "hi": 10, "steps": 2, "rounds": 50})",
         exit_ok},
        {R"({"algorithm": "solve_game", "game": {"m": [[1, -1], [-1, 1]], "lambda_kind": "simplex", "u_kind": "simplex"},
             "rounds": 100})", exit_ok},
    };
    int i = 0;
    for (const auto& [text, code] : cases) {
        const fs::path out = scratch("alg" + std::to_string(i++));
        const ExperimentResult r = run_experiment(parse_config(text), out.string());
        CHECK(r.exit_code == code);
        CHECK(fs::exists(out / "trace.csv"));
    }
}

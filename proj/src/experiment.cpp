#include "appropo/experiment.hpp"

#include "appropo/game.hpp"
#include "appropo/learner.hpp"
#include "appropo/mdp_io.hpp"
#include "appropo/trace_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>

namespace appropo {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Strict view of one JSON object: unknown keys and wrong types are errors
// naming the key's path.
class Reader {
public:
    Reader(const json& j, std::string path, const std::string& source, std::set<std::string> allowed)
        : j_(j), path_(std::move(path)), source_(source) {
        if (!j.is_object()) fail(path_.empty() ? "/" : path_, "expected an object");
        for (const auto& [key, value] : j.items())
            if (!allowed.count(key)) fail(path_ + "/" + key, "unknown key");
    }

    [[noreturn]] void fail(const std::string& where, const std::string& msg) const {
        throw ConfigError(source_ + ": " + where + ": " + msg);
    }
    std::string at(const char* key) const { return path_ + "/" + key; }
    bool has(const char* key) const { return j_.contains(key); }
    const json& raw(const char* key) const { return j_.at(key); }
    const std::string& source() const { return source_; }

    void get(const char* key, double& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) fail(at(key), "expected a number");
        out = v.get<double>();
    }
    void get(const char* key, std::optional<double>& out) const {
        if (!has(key)) return;
        double v = 0.0;
        get(key, v);
        out = v;
    }
    void get(const char* key, std::size_t& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) fail(at(key), "expected a nonnegative integer");
        out = v.get<std::size_t>();
    }
    void get(const char* key, std::uint64_t& out, int) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_unsigned()) fail(at(key), "expected a nonnegative integer");
        out = v.get<std::uint64_t>();
    }
    void get(const char* key, bool& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail(at(key), "expected true or false");
        out = v.get<bool>();
    }
    void get(const char* key, std::string& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) fail(at(key), "expected a string");
        out = v.get<std::string>();
    }
    // null entries stand for `fill` (used for infinite box bounds)
    void get(const char* key, std::vector<double>& out, double fill = kNoFill) const {
        if (!has(key)) return;
        out = numbers(j_.at(key), at(key), fill);
    }
    void get(const char* key, std::vector<std::vector<double>>& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) fail(at(key), "expected an array of arrays");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(numbers(v[i], at(key) + "/" + std::to_string(i), kNoFill));
    }
    void get(const char* key, std::vector<std::size_t>& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) fail(at(key), "expected an array of integers");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number_unsigned()) fail(at(key) + "/" + std::to_string(i), "expected a nonnegative integer");
            out.push_back(v[i].get<std::size_t>());
        }
    }
    void get(const char* key, Cell& out) const {
        if (!has(key)) return;
        out = cell(j_.at(key), at(key));
    }
    void get(const char* key, std::vector<Cell>& out) const {
        if (!has(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) fail(at(key), "expected an array of [x, y] cells");
        out.clear();
        for (std::size_t i = 0; i < v.size(); ++i) out.push_back(cell(v[i], at(key) + "/" + std::to_string(i)));
    }

private:
    static constexpr double kNoFill = 0.123456789e300;

    std::vector<double> numbers(const json& v, const std::string& where, double fill) const {
        if (!v.is_array()) fail(where, "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i].is_null() && fill != kNoFill) {
                out.push_back(fill);
            } else if (v[i].is_number()) {
                out.push_back(v[i].get<double>());
            } else {
                fail(where + "/" + std::to_string(i), fill != kNoFill ? "expected a number or null" : "expected a number");
            }
        }
        return out;
    }
    Cell cell(const json& v, const std::string& where) const {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number_unsigned() || !v[1].is_number_unsigned())
            fail(where, "expected a cell [x, y]");
        return {v[0].get<std::size_t>(), v[1].get<std::size_t>()};
    }

    const json& j_;
    std::string path_;
    const std::string& source_;
};

json bounds_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) {
        if (std::isfinite(x)) out.push_back(x);
        else out.push_back(nullptr);
    }
    return out;
}

json cells_json(const std::vector<Cell>& cells) {
    json out = json::array();
    for (const auto& c : cells) out.push_back({c.first, c.second});
    return out;
}

OracleConfig parse_oracle(const Reader& parent, const char* key) {
    OracleConfig cfg;
    if (!parent.has(key)) return cfg;
    Reader r(parent.raw(key), parent.at(key), parent.source(),
             {"mode", "eps0", "eps1", "trailing_n", "trailing_eps", "max_episodes", "vi_tolerance", "vi_max_iterations",
              "estimate_rollouts", "horizon", "learning_rate", "exploration", "warm_start_bias", "threads"});
    std::string mode = "exact";
    r.get("mode", mode);
    if (mode == "exact") cfg.mode = OracleMode::exact;
    else if (mode == "sampled") cfg.mode = OracleMode::sampled;
    else r.fail(r.at("mode"), "expected \"exact\" or \"sampled\"");
    r.get("eps0", cfg.eps0);
    r.get("eps1", cfg.eps1);
    r.get("trailing_n", cfg.trailing_n);
    r.get("trailing_eps", cfg.trailing_eps);
    r.get("max_episodes", cfg.max_episodes);
    r.get("vi_tolerance", cfg.vi_tolerance);
    r.get("vi_max_iterations", cfg.vi_max_iterations);
    r.get("estimate_rollouts", cfg.estimate_rollouts);
    r.get("horizon", cfg.horizon);
    r.get("learning_rate", cfg.learning_rate);
    r.get("exploration", cfg.exploration);
    r.get("warm_start_bias", cfg.warm_start_bias);
    r.get("threads", cfg.threads);
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        r.fail(parent.at(key), e.what());
    }
    return cfg;
}

json oracle_json(const OracleConfig& c) {
    return json{{"mode", to_string(c.mode)},
                {"eps0", c.eps0},
                {"eps1", c.eps1},
                {"trailing_n", c.trailing_n},
                {"trailing_eps", c.trailing_eps},
                {"max_episodes", c.max_episodes},
                {"vi_tolerance", c.vi_tolerance},
                {"vi_max_iterations", c.vi_max_iterations},
                {"estimate_rollouts", c.estimate_rollouts},
                {"horizon", c.horizon},
                {"learning_rate", c.learning_rate},
                {"exploration", c.exploration},
                {"warm_start_bias", c.warm_start_bias},
                {"threads", c.threads}};
}

MdpSource parse_mdp_source(const Reader& parent) {
    Reader r(parent.raw("mdp"), parent.at("mdp"), parent.source(),
             {"kind", "text", "path", "states", "actions", "dim", "gamma", "noise", "width", "height", "slip", "start",
              "goal", "unsafe", "coordinates"});
    MdpSource m;
    r.get("kind", m.kind);
    r.get("coordinates", m.coordinates);
    if (m.kind == "inline") {
        r.get("text", m.text);
        if (m.text.empty()) r.fail(r.at("text"), "inline MDP needs a text field");
    } else if (m.kind == "file") {
        r.get("path", m.path);
        if (m.path.empty()) r.fail(r.at("path"), "file MDP needs a path");
    } else if (m.kind == "random") {
        r.get("states", m.random.states);
        r.get("actions", m.random.actions);
        r.get("dim", m.random.dim);
        r.get("gamma", m.random.gamma);
        r.get("noise", m.random.noise);
        if (m.random.states < 1 || m.random.states > kMaxStates) r.fail(r.at("states"), "must be in [1, 2000]");
        if (m.random.actions < 1 || m.random.actions > kMaxActions) r.fail(r.at("actions"), "must be in [1, 64]");
        if (m.random.dim < 1 || m.random.dim > kMaxDim) r.fail(r.at("dim"), "must be in [1, 128]");
        if (!(m.random.gamma > 0.0 && m.random.gamma < 1.0)) r.fail(r.at("gamma"), "must be in (0, 1)");
    } else if (m.kind == "gridworld") {
        r.get("width", m.grid.width);
        r.get("height", m.grid.height);
        r.get("gamma", m.grid.gamma);
        r.get("slip", m.grid.slip);
        r.get("start", m.grid.start);
        r.get("goal", m.grid.goal);
        r.get("unsafe", m.grid.unsafe);
        if (m.grid.width < 1 || m.grid.height < 1 || m.grid.width * m.grid.height > kMaxStates)
            r.fail(r.at("width"), "grid size must be between 1 and 2000 cells");
        if (!(m.grid.gamma > 0.0 && m.grid.gamma < 1.0)) r.fail(r.at("gamma"), "must be in (0, 1)");
    } else {
        r.fail(r.at("kind"), "expected inline, file, random or gridworld");
    }
    return m;
}

json mdp_source_json(const MdpSource& m) {
    json j{{"kind", m.kind}};
    if (m.kind == "inline") j["text"] = m.text;
    if (m.kind == "file") j["path"] = m.path;
    if (m.kind == "random") {
        j["states"] = m.random.states;
        j["actions"] = m.random.actions;
        j["dim"] = m.random.dim;
        j["gamma"] = m.random.gamma;
        j["noise"] = m.random.noise;
    }
    if (m.kind == "gridworld") {
        j["width"] = m.grid.width;
        j["height"] = m.grid.height;
        j["gamma"] = m.grid.gamma;
        j["slip"] = m.grid.slip;
        j["start"] = {m.grid.start.first, m.grid.start.second};
        j["goal"] = {m.grid.goal.first, m.grid.goal.second};
        j["unsafe"] = cells_json(m.grid.unsafe);
    }
    if (!m.coordinates.empty()) j["coordinates"] = m.coordinates;
    return j;
}

const std::set<std::string> kTargetKinds{"box",  "ball",        "polytope",   "cone",          "polyhedral_cone",
                                         "nonpositive_orthant", "whole_space", "safety", "visitation_box"};

TargetSpec parse_target(const Reader& parent) {
    Reader r(parent.raw("target"), parent.at("target"), parent.source(),
             {"kind", "dim", "lo", "hi", "center", "radius", "a", "b", "generators", "max_unsafe", "min_visit",
              "max_visit"});
    TargetSpec t;
    r.get("kind", t.kind);
    if (!kTargetKinds.count(t.kind)) r.fail(r.at("kind"), "unknown set kind \"" + t.kind + "\"");
    r.get("dim", t.dim);
    r.get("lo", t.lo, -kInf);
    r.get("hi", t.hi, kInf);
    r.get("center", t.center);
    r.get("radius", t.radius);
    r.get("a", t.a);
    r.get("b", t.b);
    r.get("generators", t.generators);
    r.get("max_unsafe", t.max_unsafe);
    r.get("min_visit", t.min_visit);
    r.get("max_visit", t.max_visit);
    return t;
}

json target_json(const TargetSpec& t) {
    json j{{"kind", t.kind}};
    if (t.dim) j["dim"] = t.dim;
    if (!t.lo.empty()) j["lo"] = bounds_json(t.lo);
    if (!t.hi.empty()) j["hi"] = bounds_json(t.hi);
    if (!t.center.empty()) j["center"] = t.center;
    if (t.kind == "ball") j["radius"] = t.radius;
    if (!t.a.empty()) j["a"] = t.a;
    if (!t.b.empty()) j["b"] = t.b;
    if (!t.generators.empty()) j["generators"] = t.generators;
    if (t.kind == "safety") j["max_unsafe"] = t.max_unsafe;
    if (t.kind == "visitation_box") {
        j["min_visit"] = t.min_visit;
        j["max_visit"] = t.max_visit;
    }
    return j;
}

GameSpec parse_game(const Reader& parent) {
    Reader r(parent.raw("game"), parent.at("game"), parent.source(),
             {"m", "a", "b", "c", "lambda_kind", "lambda_lo", "lambda_hi", "lambda_dim", "u_kind", "u_lo", "u_hi",
              "u_dim"});
    GameSpec g;
    r.get("m", g.m);
    r.get("a", g.a);
    r.get("b", g.b);
    r.get("c", g.c);
    r.get("lambda_kind", g.lambda_kind);
    r.get("lambda_lo", g.lambda_lo);
    r.get("lambda_hi", g.lambda_hi);
    r.get("lambda_dim", g.lambda_dim);
    r.get("u_kind", g.u_kind);
    r.get("u_lo", g.u_lo);
    r.get("u_hi", g.u_hi);
    r.get("u_dim", g.u_dim);
    for (const auto* kind : {&g.lambda_kind, &g.u_kind})
        if (*kind != "box" && *kind != "simplex")
            r.fail(r.at(kind == &g.lambda_kind ? "lambda_kind" : "u_kind"), "expected \"box\" or \"simplex\"");
    if (g.m.empty() || g.m.front().empty()) r.fail(r.at("m"), "payoff matrix must be nonempty");
    for (const auto& row : g.m)
        if (row.size() != g.m.front().size()) r.fail(r.at("m"), "rows have different lengths");
    return g;
}

json game_json(const GameSpec& g) {
    json j{{"m", g.m}, {"c", g.c}, {"lambda_kind", g.lambda_kind}, {"u_kind", g.u_kind}};
    if (!g.a.empty()) j["a"] = g.a;
    if (!g.b.empty()) j["b"] = g.b;
    if (!g.lambda_lo.empty()) j["lambda_lo"] = g.lambda_lo;
    if (!g.lambda_hi.empty()) j["lambda_hi"] = g.lambda_hi;
    if (g.lambda_dim) j["lambda_dim"] = g.lambda_dim;
    if (!g.u_lo.empty()) j["u_lo"] = g.u_lo;
    if (!g.u_hi.empty()) j["u_hi"] = g.u_hi;
    if (g.u_dim) j["u_dim"] = g.u_dim;
    return j;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

Mat to_mat(const std::vector<std::vector<double>>& rows, std::size_t cols) {
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw InvalidArgument("matrix rows have inconsistent lengths");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

json vec_json(const Vec& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json mixture_json(const MixedPolicy& mix) {
    json out = json::array();
    for (const auto& c : mix.components()) {
        json comp{{"weight", c.weight}};
        if (c.policy.is_deterministic()) {
            std::vector<std::size_t> actions;
            for (std::size_t s = 0; s < c.policy.num_states(); ++s) actions.push_back(c.policy.greedy_action(s));
            comp["actions"] = actions;
        } else {
            json rows = json::array();
            for (Eigen::Index s = 0; s < c.policy.action_probs().rows(); ++s)
                rows.push_back(vec_json(c.policy.action_probs().row(s).transpose()));
            comp["action_probs"] = rows;
        }
        out.push_back(comp);
    }
    return out;
}

json trace_json(const RunTrace& t) {
    return json{{"rounds", t.rounds()},   {"eta", t.eta},
                {"eps0", t.eps0},         {"eps1", t.eps1},
                {"oracle_calls", t.oracle_calls}, {"episodes", t.episodes},
                {"cache_hits", t.cache_hits}};
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

void write_outputs(const fs::path& dir, const RunTrace& trace, const std::string& title) {
    {
        std::ofstream f(dir / "trace.csv", std::ios::binary);
        if (!f) throw Error("cannot write " + (dir / "trace.csv").string());
        write_trace_csv(f, trace);
    }
    try {
        std::ofstream f(dir / "distance.svg", std::ios::binary);
        if (!f) throw Error("cannot open file");
        write_distance_svg(f, trace, title);
    } catch (const std::exception& e) {
        std::cerr << "warning: plot not written (" << e.what() << "); trace.csv is still available\n";
    }
}

std::size_t offset_to_line(const std::string& text, std::size_t byte) {
    byte = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

ExperimentConfig config_from_json(const json& j, const std::string& source) {
    Reader r(j, "", source,
             {"algorithm", "mdp", "target", "game", "oracle", "rounds", "eta", "delta", "kappa", "variant", "use_cache",
              "cache_seed_policies", "cache_threshold", "stop_at_distance", "reward_coord", "lo", "hi", "steps",
              "output_dir", "seed"});
    ExperimentConfig c;
    r.get("algorithm", c.algorithm);
    static const std::set<std::string> algorithms{"appropo", "feasibility", "general", "maximize_reward", "solve_game"};
    if (!algorithms.count(c.algorithm))
        r.fail("/algorithm", "expected one of appropo, feasibility, general, maximize_reward, solve_game");
    if (r.has("mdp")) c.mdp = parse_mdp_source(r);
    if (r.has("target")) c.target = parse_target(r);
    if (r.has("game")) c.game = parse_game(r);
    c.oracle = parse_oracle(r, "oracle");
    r.get("rounds", c.rounds);
    r.get("eta", c.eta);
    r.get("delta", c.delta);
    r.get("kappa", c.kappa);
    r.get("variant", c.variant);
    r.get("use_cache", c.use_cache);
    r.get("cache_seed_policies", c.cache_seed_policies);
    r.get("cache_threshold", c.cache_threshold);
    r.get("stop_at_distance", c.stop_at_distance);
    r.get("reward_coord", c.reward_coord);
    r.get("lo", c.lo);
    r.get("hi", c.hi);
    r.get("steps", c.steps);
    r.get("output_dir", c.output_dir);
    r.get("seed", c.seed, 0);

    if (c.rounds < 1) r.fail("/rounds", "must be >= 1");
    if (c.eta && !(*c.eta > 0.0)) r.fail("/eta", "must be positive");
    if (!(c.delta > 0.0)) r.fail("/delta", "must be positive");
    if (c.kappa && !(*c.kappa > 0.0)) r.fail("/kappa", "must be positive");
    if (c.variant != "distance" && c.variant != "feasibility") r.fail("/variant", "expected distance or feasibility");
    if (!(c.lo <= c.hi)) r.fail("/lo", "must not exceed hi");
    if (c.algorithm == "solve_game") {
        if (!c.game) r.fail("/game", "solve_game needs a game section");
    } else {
        if (!c.mdp) r.fail("/mdp", c.algorithm + " needs an mdp section");
        if (!c.target) r.fail("/target", c.algorithm + " needs a target section");
    }
    return c;
}

json config_to_json(const ExperimentConfig& c) {
    json j{{"algorithm", c.algorithm}};
    if (c.mdp) j["mdp"] = mdp_source_json(*c.mdp);
    if (c.target) j["target"] = target_json(*c.target);
    if (c.game) j["game"] = game_json(*c.game);
    j["oracle"] = oracle_json(c.oracle);
    j["rounds"] = c.rounds;
    if (c.eta) j["eta"] = *c.eta;
    j["delta"] = c.delta;
    if (c.kappa) j["kappa"] = *c.kappa;
    j["variant"] = c.variant;
    j["use_cache"] = c.use_cache;
    j["cache_seed_policies"] = c.cache_seed_policies;
    if (c.cache_threshold) j["cache_threshold"] = *c.cache_threshold;
    if (c.stop_at_distance) j["stop_at_distance"] = *c.stop_at_distance;
    j["reward_coord"] = c.reward_coord;
    j["lo"] = c.lo;
    j["hi"] = c.hi;
    j["steps"] = c.steps;
    j["output_dir"] = c.output_dir;
    j["seed"] = c.seed;
    return j;
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        std::string msg = e.what();
        if (const auto pos = msg.find("]: "); pos != std::string::npos && msg.rfind("[json.exception", 0) == 0)
            msg = msg.substr(pos + 3);
        throw ConfigError(source + ":" + std::to_string(offset_to_line(text, e.byte)) + ": " + msg);
    }
    return config_from_json(j, source);
}

ExperimentConfig read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

VectorMDP build_mdp(const MdpSource& src, std::uint64_t seed, const std::string& base_dir) {
    VectorMDP mdp = [&]() -> VectorMDP {
        if (src.kind == "inline") {
            std::istringstream in(src.text);
            return parse_mdp(in, "<inline mdp>");
        }
        if (src.kind == "file") {
            fs::path p(src.path);
            if (p.is_relative()) p = fs::path(base_dir) / p;
            if (!fs::exists(p)) throw ConfigError("/mdp/path: file not found: " + p.string());
            return read_mdp_file(p.string());
        }
        if (src.kind == "random") return random_mdp(seed, src.random);
        return gridworld(src.grid).mdp;
    }();
    if (src.coordinates.empty()) return mdp;
    for (std::size_t c : src.coordinates)
        if (c >= mdp.dim()) throw ConfigError("/mdp/coordinates: index " + std::to_string(c) + " out of range");
    return mdp.with_coordinates(src.coordinates);
}

TargetSet build_target(const TargetSpec& t, const MdpSource* src, std::size_t dim) {
    auto need = [&](std::size_t n, const char* key) {
        if (n != dim)
            throw ConfigError(std::string("/target/") + key + ": has length " + std::to_string(n) + ", expected " +
                              std::to_string(dim));
    };
    if (t.kind == "whole_space") return TargetSet::whole_space(t.dim ? t.dim : dim);
    if (t.kind == "nonpositive_orthant") return TargetSet::nonpositive_orthant(t.dim ? t.dim : dim);
    if (t.kind == "box") {
        need(t.lo.size(), "lo");
        need(t.hi.size(), "hi");
        return TargetSet::box(to_vec(t.lo), to_vec(t.hi));
    }
    if (t.kind == "ball") {
        need(t.center.size(), "center");
        return TargetSet::ball(to_vec(t.center), t.radius);
    }
    if (t.kind == "polytope") {
        if (t.a.size() != t.b.size()) throw ConfigError("/target/b: needs one entry per row of a");
        Mat a = to_mat(t.a, dim);
        if (t.lo.empty() && t.hi.empty()) return TargetSet::polytope(std::move(a), to_vec(t.b));
        need(t.lo.size(), "lo");
        need(t.hi.size(), "hi");
        return TargetSet::polytope(std::move(a), to_vec(t.b), to_vec(t.lo), to_vec(t.hi));
    }
    if (t.kind == "cone") {
        if (t.generators.empty()) throw ConfigError("/target/generators: at least one generator is required");
        return TargetSet::cone(to_mat(t.generators, dim).transpose());
    }
    if (t.kind == "polyhedral_cone") return TargetSet::polyhedral_cone(to_mat(t.a, dim));
    if (!src || src->kind != "gridworld" || !src->coordinates.empty())
        throw ConfigError("/target/kind: preset \"" + t.kind + "\" requires an unrestricted gridworld mdp");
    const Gridworld g = gridworld(src->grid);
    if (t.kind == "safety") return safety_preset(g, t.max_unsafe);
    return visitation_box_preset(g, t.min_visit, t.max_visit);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, const std::string& base_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    ExperimentResult res;
    json& s = res.summary;
    s["algorithm"] = cfg.algorithm;
    s["seed"] = cfg.seed;

    OracleConfig oracle = cfg.oracle;
    oracle.seed = derive_seed(cfg.seed, 2);

    if (cfg.algorithm == "solve_game") {
        const GameSpec& gs = *cfg.game;
        const std::size_t n = gs.m.size();
        const std::size_t k = gs.m.front().size();
        BilinearPayoff p{to_mat(gs.m, k), gs.a.empty() ? Vec::Zero(static_cast<Eigen::Index>(n)) : to_vec(gs.a),
                         gs.b.empty() ? Vec::Zero(static_cast<Eigen::Index>(k)) : to_vec(gs.b), gs.c};
        if (static_cast<std::size_t>(p.a.size()) != n) throw ConfigError("/game/a: needs one entry per row of m");
        if (static_cast<std::size_t>(p.b.size()) != k) throw ConfigError("/game/b: needs one entry per column of m");
        auto domain = [](const std::string& kind, const std::vector<double>& lo, const std::vector<double>& hi,
                         std::size_t dim, const char* key) -> std::shared_ptr<const Domain> {
            if (kind == "simplex") return std::make_shared<SimplexDomain>(dim);
            if (lo.size() != dim || hi.size() != dim)
                throw ConfigError(std::string("/game/") + key + "_lo: box bounds need " + std::to_string(dim) + " entries");
            return std::make_shared<BoxDomain>(to_vec(lo), to_vec(hi));
        };
        GameConfig gc;
        gc.payoff = p;
        gc.lambda_set = domain(gs.lambda_kind, gs.lambda_lo, gs.lambda_hi, n, "lambda");
        gc.u_set = domain(gs.u_kind, gs.u_lo, gs.u_hi, k, "u");
        gc.rounds = cfg.rounds;
        gc.eta = cfg.eta;
        gc.seed = derive_seed(cfg.seed, 3);
        const GameResult g = solve_game(gc);

        // trace: u_t in the zhat columns, duality gap of the running averages as the distance
        RunTrace trace;
        trace.eta = g.learner.eta;
        Vec lsum = Vec::Zero(static_cast<Eigen::Index>(n));
        Vec usum = Vec::Zero(static_cast<Eigen::Index>(k));
        for (std::size_t t = 0; t < g.responses.size(); ++t) {
            IterationRecord r;
            r.t = t + 1;
            r.lambda = g.learner.iterates[t];
            r.z_hat = g.responses[t];
            r.loss = -p(r.lambda, r.z_hat);
            lsum += r.lambda;
            usum += r.z_hat;
            const Vec lbar = lsum / static_cast<double>(t + 1);
            const Vec ubar = usum / static_cast<double>(t + 1);
            r.running_mean = ubar;
            const double lower = gc.u_set->min_linear(p.m.transpose() * lbar + p.b) + p.a.dot(lbar) + p.c;
            const double upper = -gc.lambda_set->min_linear(-(p.m * ubar + p.a)) + p.b.dot(ubar) + p.c;
            r.running_distance = upper - lower;
            trace.records.push_back(std::move(r));
        }
        write_outputs(dir, trace, "solve_game: duality gap of averages");
        const auto& c = g.certificate;
        s["outcome"] = "complete";
        s["lambda_bar"] = vec_json(g.lambda_bar);
        s["u_bar"] = vec_json(g.u_bar);
        s["regret"] = c.regret;
        s["regret_bound"] = c.regret_bound;
        s["lower_value"] = c.lower_value;
        s["upper_value"] = c.upper_value;
        s["value"] = c.value ? json(*c.value) : json(nullptr);
        s["certified"] = c.certified();
    } else {
        const VectorMDP mdp = build_mdp(*cfg.mdp, derive_seed(cfg.seed, 1), base_dir);
        const TargetSet target = build_target(*cfg.target, &*cfg.mdp, mdp.dim());
        if (target.dim() != mdp.dim())
            throw ConfigError("/target: dimension " + std::to_string(target.dim()) + " does not match measurement dimension " +
                              std::to_string(mdp.dim()));
        AppropoOptions opts;
        opts.rounds = cfg.rounds;
        opts.eta = cfg.eta;
        opts.use_cache = cfg.use_cache;
        opts.cache_seed_policies = cfg.cache_seed_policies;
        opts.cache_threshold = cfg.cache_threshold;
        opts.stop_at_distance = cfg.stop_at_distance;
        PolicyCache cache;
        PolicyCache* cache_ptr = cfg.use_cache ? &cache : nullptr;
        s["measurement_dim"] = mdp.dim();
        s["bound_B"] = mdp.bound();
        s["gamma"] = mdp.gamma();

        auto record_outcome = [&](const FeasibilityOutcome& o) {
            s["outcome"] = outcome_name(o);
            if (const auto* inf = std::get_if<Infeasible>(&o)) {
                s["witness"] = {{"iteration", inf->iteration},
                                {"lambda", vec_json(inf->witness)},
                                {"loss", inf->loss},
                                {"threshold", inf->threshold}};
                res.exit_code = exit_infeasible;
            } else if (const auto* emp = std::get_if<EmpiricallyInfeasible>(&o)) {
                s["diagnostics"] = {{"iteration", emp->iteration},
                                    {"lambda", vec_json(emp->lambda)},
                                    {"trailing_mean", emp->trailing_mean},
                                    {"episodes", emp->episodes}};
                res.exit_code = exit_empirically_infeasible;
            }
        };

        if (cfg.algorithm == "appropo" || cfg.algorithm == "feasibility") {
            if (!target.is_cone())
                throw ConfigError("/target/kind: " + cfg.algorithm + " needs a cone target; use algorithm general for compact sets");
            RunTrace trace;
            if (cfg.algorithm == "appropo") {
                AppropoRun run = run_appropo(mdp, target, oracle, opts, cache_ptr);
                s["outcome"] = "complete";
                s["mixture"] = mixture_json(run.policy);
                trace = std::move(run.trace);
            } else {
                FeasibilityRun run = run_feasibility(mdp, target, oracle, opts, cache_ptr);
                record_outcome(run.outcome);
                if (const auto* f = std::get_if<Feasible>(&run.outcome)) s["mixture"] = mixture_json(f->policy);
                trace = std::move(run.trace);
            }
            const double eps1 = trace.eps1;
            s["final_distance"] = number_or_null(trace.final_distance);
            s["distance_bound"] = distance_bound(mdp.bound(), mdp.gamma(), trace.eps0, eps1, std::max<std::size_t>(trace.rounds(), 1));
            s["run"] = trace_json(trace);
            write_outputs(dir, trace, cfg.algorithm + ": running distance to target");
        } else if (cfg.algorithm == "general") {
            if (!target.is_compact()) throw ConfigError("/target/kind: general needs a compact target");
            const LiftedCone lifted = cfg.kappa ? lift_with_kappa(target, *cfg.kappa) : lift(target, cfg.delta);
            const Variant v = cfg.variant == "distance" ? Variant::distance : Variant::feasibility;
            GeneralRun run = run_general(mdp, lifted, oracle, v, opts, cache_ptr);
            s["variant"] = cfg.variant;
            s["kappa"] = lifted.kappa;
            s["delta"] = lifted.delta;
            if (run.outcome) record_outcome(*run.outcome);
            else s["outcome"] = "complete";
            if (run.policy) s["mixture"] = mixture_json(*run.policy);
            s["final_distance"] = number_or_null(run.distance);
            s["lifted_distance"] = number_or_null(run.lifted_distance);
            s["distance_bound"] = run.bound;
            if (run.measurement.size()) s["measurement"] = vec_json(run.measurement);
            s["run"] = trace_json(run.trace);
            write_outputs(dir, run.trace, "general: running distance to target");
        } else {
            if (!target.is_compact()) throw ConfigError("/target/kind: maximize_reward needs a compact base set");
            if (cfg.reward_coord >= mdp.dim()) throw ConfigError("/reward_coord: out of range");
            MaximizeOptions mo;
            mo.reward_coord = cfg.reward_coord;
            mo.lo = cfg.lo;
            mo.hi = cfg.hi;
            mo.steps = cfg.steps;
            mo.delta = cfg.delta;
            mo.run = opts;
            MaximizeResult m = maximize_reward(mdp, target, oracle, mo);
            s["outcome"] = m.infeasible_at_floor ? "infeasible" : "complete";
            if (m.infeasible_at_floor) res.exit_code = exit_infeasible;
            s["threshold"] = m.threshold;
            s["infeasible_at_floor"] = m.infeasible_at_floor;
            s["oracle_calls"] = m.oracle_calls;
            s["cache_hits"] = m.cache_hits;
            json steps = json::array();
            for (const auto& st : m.steps)
                steps.push_back({{"threshold", st.threshold},
                                 {"outcome", st.outcome},
                                 {"oracle_calls", st.oracle_calls},
                                 {"cache_hits", st.cache_hits},
                                 {"distance", number_or_null(st.distance)},
                                 {"bound", st.bound}});
            s["steps"] = steps;
            if (m.policy) s["mixture"] = mixture_json(*m.policy);
            write_outputs(dir, m.trace ? *m.trace : RunTrace{}, "maximize_reward: running distance (reported step)");
            std::ofstream f(dir / "cache.csv", std::ios::binary);
            m.cache.write_csv(f);
            cache_ptr = nullptr;
        }
        if (cache_ptr) {
            std::ofstream f(dir / "cache.csv", std::ios::binary);
            cache.write_csv(f);
        }
    }
    s["exit_code"] = res.exit_code;
    std::ofstream f(dir / "summary.json", std::ios::binary);
    f << s.dump(2) << '\n';
    return res;
}

}  // namespace appropo

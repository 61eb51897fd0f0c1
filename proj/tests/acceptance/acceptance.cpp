// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "appropo/appropo.hpp"
#include "appropo/convex.hpp"
#include "appropo/env.hpp"
#include "appropo/game.hpp"
#include "appropo/learner.hpp"
#include "appropo/linprog.hpp"
#include "test_oracles.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace appropo;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = true;
    std::string detail;
    int failures = 0;

    void check(bool ok, const std::string& what) {
        if (ok) return;
        pass = false;
        if (failures++ < 3) detail += (detail.empty() ? "" : "; ") + what;
    }
};

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", x);
    return buf;
}

Vec uniform_vec(Rng& rng, Eigen::Index d, double lo, double hi) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

Vec normal_vec(Rng& rng, Eigen::Index d) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    return v;
}

Mat normal_mat(Rng& rng, Eigen::Index r, Eigen::Index c) {
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

VectorMDP random_instance(Rng& rng, std::uint64_t seed, double gamma = 0.9) {
    RandomMdpSpec spec;
    spec.states = 5 + rng.index(16);
    spec.actions = 2 + rng.index(3);
    spec.dim = 2 + rng.index(3);
    spec.gamma = gamma;
    return random_mdp(seed, spec);
}

std::vector<Vec> box_vertices(const Vec& lo, const Vec& hi) {
    std::vector<Vec> out;
    const auto d = lo.size();
    for (long mask = 0; mask < (1L << d); ++mask) {
        Vec v(d);
        for (Eigen::Index i = 0; i < d; ++i) v(i) = (mask >> i) & 1 ? hi(i) : lo(i);
        out.push_back(v);
    }
    return out;
}

// Game value max_lambda min_u over boxes, as an LP over the u-box vertices.
double box_game_value(const BilinearPayoff& g, const Vec& llo, const Vec& lhi, const Vec& ulo, const Vec& uhi) {
    const auto n = llo.size();
    const std::vector<Vec> us = box_vertices(ulo, uhi);
    const auto k = static_cast<Eigen::Index>(us.size());
    Mat a = Mat::Zero(k + n, n + 2);
    Vec b(k + n);
    for (Eigen::Index r = 0; r < k; ++r) {
        const Vec& u = us[static_cast<std::size_t>(r)];
        const Vec coef = g.m * u + g.a;
        a.block(r, 0, 1, n) = -coef.transpose();
        a(r, n) = 1.0;
        a(r, n + 1) = -1.0;
        b(r) = coef.dot(llo) + g.b.dot(u) + g.c;
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        a(k + i, i) = 1.0;
        b(k + i) = lhi(i) - llo(i);
    }
    Vec c = Vec::Zero(n + 2);
    c(n) = 1.0;
    c(n + 1) = -1.0;
    const LpResult r = solve_lp({c, a, b, Mat(0, n + 2), Vec(0)});
    if (r.status != LpStatus::optimal) throw std::runtime_error("game value LP failed");
    return r.objective;
}

Verdict bilinear_games() {
    Verdict v;
    Rng rng(101);
    const std::size_t rounds = 2000;
    double worst = -INFINITY;
    for (int game = 0; game < 20; ++game) {
        const Eigen::Index n = game < 5 ? 1 : 2 + static_cast<Eigen::Index>(rng.index(3));
        const Eigen::Index k = game < 5 ? 1 : 2 + static_cast<Eigen::Index>(rng.index(3));
        BilinearPayoff g{normal_mat(rng, n, k), normal_vec(rng, n), normal_vec(rng, k), rng.normal()};
        const Vec llo = uniform_vec(rng, n, -2, -0.2), lhi = uniform_vec(rng, n, 0.2, 2);
        const Vec ulo = uniform_vec(rng, k, -1, 0), uhi = uniform_vec(rng, k, 0.1, 1.5);
        GameConfig cfg;
        cfg.payoff = g;
        cfg.lambda_set = std::make_shared<BoxDomain>(llo, lhi);
        cfg.u_set = std::make_shared<BoxDomain>(ulo, uhi);
        cfg.rounds = rounds;
        cfg.seed = static_cast<std::uint64_t>(game);
        const GameResult r = solve_game(cfg);
        const double value = box_game_value(g, llo, lhi, ulo, uhi);
        double lower = INFINITY, upper = -INFINITY;
        for (const Vec& u : box_vertices(ulo, uhi)) lower = std::min(lower, g(r.lambda_bar, u));
        for (const Vec& l : box_vertices(llo, lhi)) upper = std::max(upper, g(l, r.u_bar));
        const double slack = r.certificate.regret / static_cast<double>(rounds);
        v.check(lower >= value - slack - 1e-9, "game " + std::to_string(game) + ": lower gap");
        v.check(upper <= value + slack + 1e-9, "game " + std::to_string(game) + ": upper gap");
        v.check(r.certificate.regret <= r.certificate.regret_bound,
                "game " + std::to_string(game) + ": regret above DG sqrt(T)");
        worst = std::max(worst, r.certificate.regret / r.certificate.regret_bound);
    }
    if (v.pass) v.detail = "20 games, max regret / DG sqrt(T) = " + num(worst);
    return v;
}

Verdict distance_guarantee() {
    Verdict v;
    Rng rng(202);
    double worst = -INFINITY;
    for (int inst = 0; inst < 10; ++inst) {
        const VectorMDP mdp = random_instance(rng, 2000 + static_cast<std::uint64_t>(inst));
        const auto d = static_cast<Eigen::Index>(mdp.dim());
        const Mat gens = normal_mat(rng, d, 2 + static_cast<Eigen::Index>(rng.index(3)));
        const TargetSet cone = TargetSet::cone(gens);
        AppropoOptions opts;
        opts.rounds = 2000;
        const AppropoRun run = run_appropo(mdp, cone, OracleConfig{}, opts);
        const auto md = testing_oracle::min_distance_cone(mdp, gens, 1e-8);
        const double rhs = md.lower + distance_bound(mdp.bound(), mdp.gamma(), run.trace.eps0, 0.0, opts.rounds);
        v.check(run.trace.final_distance <= rhs, "instance " + std::to_string(inst) + ": distance " +
                                                      num(run.trace.final_distance) + " > " + num(rhs));
        worst = std::max(worst, run.trace.final_distance - rhs);
    }
    if (v.pass) v.detail = "10 MDPs, max (distance - bound) = " + num(worst);
    return v;
}

Verdict feasibility_soundness() {
    Verdict v;
    const OracleConfig exact;
    {
        const VectorMDP mdp(Vec::Ones(1), Mat::Ones(1, 1), Mat::Ones(1, 1), 0.9);
        AppropoOptions opts;
        opts.rounds = 2000;
        const FeasibilityRun r = run_feasibility(mdp, TargetSet::nonpositive_orthant(1), exact, opts);
        const auto* inf = std::get_if<Infeasible>(&r.outcome);
        v.check(inf && inf->iteration <= 50, "one-dimensional instance not reported within 50 iterations");
        if (inf) v.check(inf->loss < -(r.trace.eps0 + r.trace.eps1), "report without a violated threshold");
    }
    Rng rng(303);
    for (int inst = 0; inst < 10; ++inst) {
        const VectorMDP mdp = random_instance(rng, 3000 + static_cast<std::uint64_t>(inst));
        const auto d = static_cast<Eigen::Index>(mdp.dim());
        // a cone through the measurement of a random policy is feasible by construction
        Mat probs(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(mdp.num_actions()));
        for (Eigen::Index i = 0; i < probs.size(); ++i) probs.data()[i] = rng.uniform() + 0.05;
        for (Eigen::Index s = 0; s < probs.rows(); ++s) probs.row(s) /= probs.row(s).sum();
        const Vec z = testing_oracle::evaluate(mdp, probs);
        Mat gens(d, 3);
        gens.col(0) = z;
        gens.rightCols(2) = normal_mat(rng, d, 2);
        AppropoOptions opts;
        opts.rounds = 1000;
        const FeasibilityRun r = run_feasibility(mdp, TargetSet::cone(gens), exact, opts);
        const auto* f = std::get_if<Feasible>(&r.outcome);
        v.check(f != nullptr, "feasible instance " + std::to_string(inst) + " reported " + outcome_name(r.outcome));
        if (f) {
            const double rhs = distance_bound(mdp.bound(), mdp.gamma(), r.trace.eps0, r.trace.eps1, opts.rounds);
            v.check(f->distance <= rhs, "feasible instance " + std::to_string(inst) + ": distance above bound");
        }
    }
    if (v.pass) v.detail = "infeasibility detected; 10 feasible instances within bound";
    return v;
}

TargetSet random_cone(Rng& rng, int kind) {
    const auto d = static_cast<Eigen::Index>(2 + rng.index(4));
    switch (kind % 4) {
        case 0: return TargetSet::cone(normal_mat(rng, d, 1 + static_cast<Eigen::Index>(rng.index(6))));
        case 1: return TargetSet::polyhedral_cone(normal_mat(rng, 1 + static_cast<Eigen::Index>(rng.index(3)), d));
        case 2: {
            Vec lo = Vec::Constant(d, -INFINITY), hi = Vec::Constant(d, INFINITY);
            for (Eigen::Index i = 0; i < d; ++i) {
                const std::size_t c = rng.index(3);
                if (c == 0) hi(i) = 0.0;
                if (c == 1) lo(i) = 0.0;
            }
            return TargetSet::box(lo, hi);
        }
        default: {
            const Vec lo = uniform_vec(rng, d, -1, 0.5);
            return lift(TargetSet::box(lo, lo + uniform_vec(rng, d, 0, 1)), rng.uniform(0.05, 1.0)).as_set();
        }
    }
}

Verdict moreau_suite() {
    Verdict v;
    Rng rng(404);
    for (int pair = 0; pair < 1000; ++pair) {
        const TargetSet cone = random_cone(rng, pair);
        const LambdaSet lam(cone);
        const auto d = static_cast<Eigen::Index>(cone.dim());
        const Vec x = uniform_vec(rng, d, -3, 3);
        const Vec p = cone.project(x);
        const Vec q = project_polar(cone, x);
        const std::string tag = to_string(cone.kind()) + " pair " + std::to_string(pair);
        v.check((p + q - x).norm() <= 1e-8, tag + ": decomposition");
        v.check(cone.contains(p, 1e-8), tag + ": projection outside C");
        v.check(std::abs(p.dot(q)) <= 1e-8, tag + ": orthogonality " + num(p.dot(q)));
        for (int k = 0; k < 10; ++k) {
            const Vec c = cone.sample(rng);
            v.check(q.dot(c) <= 1e-8 * std::max(1.0, c.norm()), tag + ": polar residual not in polar cone");
        }
        const double dist = cone.distance(x);
        const Vec star = lambda_maximizer(cone, x);
        v.check(std::abs(star.dot(x) - dist) <= 1e-9, tag + ": attainment");
        v.check(lam.contains(star, 1e-9), tag + ": maximizer outside Lambda");
        for (int k = 0; k < 10; ++k) {
            const Vec l = lam.project(uniform_vec(rng, d, -2, 2));
            v.check(l.dot(x) <= dist + 1e-9, tag + ": sampled lambda exceeds distance");
        }
    }
    if (v.pass) v.detail = "1000 cone/point pairs";
    return v;
}

Verdict lifting_suite() {
    Verdict v;
    Rng rng(505);
    for (double delta : {0.05, 0.1, 0.5, 1.0}) {
        for (int pair = 0; pair < 100; ++pair) {
            const auto d = static_cast<Eigen::Index>(1 + rng.index(4));
            const Vec lo = uniform_vec(rng, d, -2, 1);
            const TargetSet base = TargetSet::box(lo, lo + uniform_vec(rng, d, 0, 2));
            const LiftedCone lifted = lift(base, delta);
            const double expected_kappa = measurement_bound_norm(base) / std::sqrt(2 * delta);
            v.check(std::abs(lifted.kappa - expected_kappa) <= 1e-12 * std::max(1.0, expected_kappa), "kappa formula");
            const Vec x = uniform_vec(rng, d, -5, 5);
            const double plain = base.distance(x);
            const double cone_dist = lifted.as_set().distance(lifted.lift_point(x));
            v.check(plain <= (1 + delta) * cone_dist + 1e-9,
                    "delta " + num(delta) + " pair " + std::to_string(pair) + ": " + num(plain) + " > (1+delta) " +
                        num(cone_dist));
            v.check(cone_dist <= plain + 1e-9, "lifting increased a distance");
        }
    }
    const double deltas[] = {0.05, 0.1, 0.5, 1.0, 0.3};
    for (int inst = 0; inst < 5; ++inst) {
        RandomMdpSpec spec;
        spec.states = 6;
        spec.actions = 3;
        spec.dim = 2;
        const VectorMDP mdp = random_mdp(5000 + static_cast<std::uint64_t>(inst), spec);
        // boxes alternate between overlapping the achievable set and lying away from it
        const double shift = inst % 2 ? 6.0 : -1.0;
        const Vec lo = uniform_vec(rng, 2, shift, shift + 1);
        const Vec hi = lo + uniform_vec(rng, 2, 0.5, 2);
        AppropoOptions opts;
        opts.rounds = 2000;
        const double delta = deltas[inst];
        const GeneralRun r = run_general(mdp, TargetSet::box(lo, hi), delta, OracleConfig{}, Variant::distance, opts);
        const auto md = testing_oracle::min_distance_box(mdp, lo, hi, 1e-8);
        const double rhs = (1 + delta) * md.lower + r.bound;
        v.check(r.distance <= rhs, "general instance " + std::to_string(inst) + ": " + num(r.distance) + " > " + num(rhs));
        v.check(r.distance <= (1 + delta) * r.lifted_distance + 1e-8, "general instance: lifting inequality");
    }
    if (v.pass) v.detail = "400 lifting pairs, 5 lifted runs within bound";
    return v;
}

Verdict regret_suite() {
    Verdict v;
    Rng rng(606);
    const std::size_t rounds = 500;
    double worst = 0.0;
    for (int seq = 0; seq < 50; ++seq) {
        const double g_bound = rng.uniform(0.5, 10.0);
        std::unique_ptr<Domain> domain;
        Vec start;
        double diameter = 0.0;
        switch (seq % 3) {
            case 0: {
                const auto d = static_cast<Eigen::Index>(2 + rng.index(3));
                domain = std::make_unique<ConeLambdaDomain>(TargetSet::cone(normal_mat(rng, d, d)));
                start = Vec::Zero(d);
                diameter = 1.0;  // Lambda lies in the unit ball around the start
                break;
            }
            case 1: {
                const Vec lo = uniform_vec(rng, 3, -1, 0);
                const Vec hi = lo + uniform_vec(rng, 3, 0.1, 2);
                domain = std::make_unique<BoxDomain>(lo, hi);
                start = hi;
                diameter = domain->diameter();
                break;
            }
            default:
                domain = std::make_unique<SimplexDomain>(5);
                start = Vec::Unit(5, 0);
                diameter = domain->diameter();
        }
        const auto d = static_cast<Eigen::Index>(domain->dim());
        OgdState state(start, ogd_step_size(diameter, g_bound, rounds));
        Vec fixed = normal_vec(rng, d);
        fixed.normalize();
        for (std::size_t t = 0; t < rounds; ++t) {
            Vec g;
            switch (seq % 5) {
                case 0: g = normal_vec(rng, d).normalized(); break;
                case 1: g = (t % 2 ? 1.0 : -1.0) * fixed; break;
                case 2: g = state.current.norm() > 0 ? Vec(state.current.normalized()) : fixed; break;
                case 3: g = t < rounds / 2 ? fixed : Vec(-fixed); break;
                default: g = (t % 7 < 3 ? -1.0 : 1.0) * fixed;
            }
            ogd_step(state, g * g_bound, *domain);
        }
        const double bound = diameter * g_bound * std::sqrt(static_cast<double>(rounds));
        const double regret = realized_regret(state, *domain);
        v.check(regret <= bound + 1e-6, "sequence " + std::to_string(seq) + ": regret " + num(regret) + " > " + num(bound));
        worst = std::max(worst, regret / bound);
    }
    if (v.pass) v.detail = "50 sequences, max regret / DG sqrt(T) = " + num(worst);
    return v;
}

Verdict reward_maximization() {
    Verdict v;
    GridworldSpec spec;
    spec.gamma = 0.7;
    const Gridworld grid = gridworld(spec);
    const VectorMDP mdp = grid.mdp.with_coordinates({Gridworld::reward_coord, Gridworld::unsafe_coord});
    const double cap = 0.35;
    Vec unsafe_dir(2);
    unsafe_dir << 0.0, 1.0;
    const TargetSet base = indicator_box(2, spec.gamma).with_halfspace(unsafe_dir, cap);

    // constrained optimum over mixed policies from the hull of all deterministic ones
    std::vector<std::pair<double, double>> points;
    testing_oracle::for_each_deterministic(mdp.num_states(), mdp.num_actions(), [&](const std::vector<std::size_t>& acts) {
        const Vec z = testing_oracle::evaluate_deterministic(mdp, acts);
        points.emplace_back(z(1), z(0));
    });

    MaximizeOptions opts;
    opts.reward_coord = 0;
    opts.lo = 0.0;
    opts.hi = 1.0 / (1.0 - spec.gamma);
    opts.steps = 8;
    opts.delta = 0.5;
    opts.run.rounds = 2000;
    const MaximizeResult r = maximize_reward(mdp, base, OracleConfig{}, opts);

    double eps = 0.0;
    for (const BisectionStep& s : r.steps) {
        eps = std::max(eps, s.bound);
        if (s.feasible) v.check(s.distance <= s.bound, "step at " + num(s.threshold) + ": distance above bound");
    }
    const double resolution = (opts.hi - opts.lo) * std::ldexp(1.0, -static_cast<int>(opts.steps));
    const double best = testing_oracle::constrained_max(points, cap);
    const double relaxed = testing_oracle::constrained_max(points, cap + eps);
    v.check(!r.infeasible_at_floor && r.policy.has_value(), "no policy returned");
    v.check(r.threshold >= best - resolution, "threshold " + num(r.threshold) + " below optimum " + num(best));
    v.check(r.threshold <= relaxed + eps, "threshold " + num(r.threshold) + " above relaxed optimum " + num(relaxed + eps));
    v.check(r.oracle_calls <= opts.steps * opts.run.rounds, "oracle calls " + std::to_string(r.oracle_calls));
    v.check(r.cache_hits > 0, "no cache hits");
    if (v.pass)
        v.detail = "threshold " + num(r.threshold) + ", optimum " + num(best) + ", oracle calls " +
                   std::to_string(r.oracle_calls) + ", cache hits " + std::to_string(r.cache_hits);
    return v;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(APPROPO_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Verdict reproducibility() {
    Verdict v;
    const fs::path dir = fs::temp_directory_path() / "appropo_acceptance_repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::pair<std::string, std::string>> configs = {
        {"exact", R"({"algorithm": "appropo", "mdp": {"kind": "random", "states": 8, "actions": 3, "dim": 3},
            "target": {"kind": "cone", "generators": [[1, 0, 0], [0, 1, 1]]}, "rounds": 300, "use_cache": true})"},
        {"sampled", R"({"algorithm": "feasibility", "mdp": {"kind": "random", "states": 6, "actions": 2, "dim": 2,
            "noise": true}, "target": {"kind": "whole_space"},
            "oracle": {"mode": "sampled", "max_episodes": 40, "estimate_rollouts": 200, "threads": 1}, "rounds": 20})"},
        {"threaded", R"({"algorithm": "appropo", "mdp": {"kind": "random", "states": 6, "actions": 2, "dim": 2,
            "noise": true}, "target": {"kind": "nonpositive_orthant"},
            "oracle": {"mode": "sampled", "max_episodes": 40, "estimate_rollouts": 200, "threads": 4}, "rounds": 20})"},
        {"general", R"({"algorithm": "general", "mdp": {"kind": "gridworld"}, "target": {"kind": "safety",
            "max_unsafe": 0.5}, "rounds": 200})"},
    };
    for (const auto& [name, text] : configs) {
        const fs::path cfg = dir / (name + ".json");
        std::ofstream(cfg, std::ios::binary) << text;
        std::string traces[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path out = dir / (name + std::to_string(rep));
            const int code = run_cli("run --config " + cfg.string() + " --seed 7 --out " + out.string());
            v.check(code == 0 || code == 2 || code == 3, name + ": exit code " + std::to_string(code));
            traces[rep] = slurp(out / "trace.csv");
        }
        v.check(!traces[0].empty(), name + ": empty trace");
        v.check(traces[0] == traces[1], name + ": traces differ");
    }
    // the thread count must not change sampled results
    const fs::path cfg = dir / "threaded.json";
    const fs::path one = dir / "threads1";
    run_cli("run --config " + cfg.string() + " --seed 7 --threads 1 --out " + one.string());
    v.check(slurp(one / "trace.csv") == slurp(dir / "threaded0" / "trace.csv"), "trace depends on thread count");
    if (v.pass) v.detail = "4 configurations, byte-identical traces";
    return v;
}

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;  // 0 means untimed
    std::function<Verdict()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "bilinear game gaps and regret", 5, bilinear_games},
        {2, "distance guarantee on random MDPs", 60, distance_guarantee},
        {3, "feasibility soundness", 20, feasibility_soundness},
        {4, "Moreau decomposition and Lambda attainment", 5, moreau_suite},
        {5, "lifting to a cone", 30, lifting_suite},
        {6, "online gradient descent regret", 2, regret_suite},
        {7, "reward maximization by bisection", 120, reward_maximization},
        {8, "reproducible traces", 0, reproducibility},
    };
    int failed = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.body();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0 && secs > c.limit_seconds) {
            v.pass = false;
            v.detail += (v.detail.empty() ? "" : "; ") + std::string("took longer than ") + num(c.limit_seconds) + " s";
        }
        if (!v.pass) ++failed;
        std::printf("%s criterion %d (%s) [%.2f s]: %s\n", v.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                    v.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

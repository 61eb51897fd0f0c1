#include "appropo/appropo.hpp"

#include "appropo/learner.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

namespace appropo {
namespace {

using Report = std::function<Vec(const Vec&)>;
using ReportDistance = std::function<double(const Vec&)>;

struct LoopResult {
    RunTrace trace;
    std::optional<FeasibilityOutcome> stopped;  // set when infeasibility was reported
};

std::size_t policy_id(RunTrace& trace, const StationaryPolicy& policy) {
    for (std::size_t i = trace.policies.size(); i-- > 0;)
        if (trace.policies[i] == policy) return i;
    trace.policies.push_back(policy);
    return trace.policies.size() - 1;
}

void seed_cache(PolicyCache& cache, const VectorMDP& mdp, const OracleConfig& cfg, std::size_t count) {
    if (cache.size() > 0 || count == 0) return;
    PolicyCache fresh = PolicyCache::with_random_policies(mdp, count, cfg, derive_seed(cfg.seed, 0xcac4e));
    for (const auto& e : fresh.entries()) cache.insert(e);
}

LoopResult run_loop(const VectorMDP& mdp, const TargetSet& cone, const OracleConfig& cfg, const AppropoOptions& opts,
                    PolicyCache* shared, Variant variant, double eta, const Report& report,
                    const ReportDistance& report_distance) {
    cfg.validate();
    if (opts.rounds < 1) throw InvalidArgument("appropo: rounds must be >= 1");
    if (!cone.is_cone()) throw InvalidArgument("appropo: target must be a cone (use run_general for compact sets)");
    if (cone.dim() != mdp.dim())
        throw DimensionError("appropo: target has dimension " + std::to_string(cone.dim()) + ", measurements have " +
                             std::to_string(mdp.dim()));
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("appropo: step size must be positive");

    const auto start = std::chrono::steady_clock::now();
    const bool sampled = cfg.mode == OracleMode::sampled;
    const auto d = static_cast<Eigen::Index>(mdp.dim());

    PolicyCache local;
    PolicyCache* cache = shared ? shared : (opts.use_cache ? &local : nullptr);
    double eps0 = cfg.best_response_eps0(mdp);
    double threshold = 0.0;
    if (cache) {
        seed_cache(*cache, mdp, cfg, opts.cache_seed_policies);
        threshold = opts.cache_threshold.value_or(eps0);
        if (!(threshold >= 0.0)) throw InvalidArgument("appropo: cache threshold must be nonnegative");
        eps0 = std::max(eps0, threshold);
    }

    LoopResult out;
    RunTrace& trace = out.trace;
    trace.eta = eta;
    trace.eps0 = eps0;
    trace.eps1 = sampled ? cfg.eps1 : 0.0;
    trace.bound_b = mdp.bound();
    trace.gamma = mdp.gamma();
    trace.records.reserve(opts.rounds);

    const ConeLambdaDomain domain(cone);
    OgdState state(Vec::Zero(d), eta);
    Vec z_sum = Vec::Zero(d);
    std::optional<StationaryPolicy> previous;
    const std::size_t hits_before = cache ? cache->hits() : 0;

    for (std::size_t t = 1; t <= opts.rounds; ++t) {
        const Vec lambda = state.current;
        IterationRecord rec;
        rec.t = t;
        rec.lambda = lambda;
        std::optional<StationaryPolicy> policy;
        double eps1_t = trace.eps1;

        CacheLookup look;
        if (cache) look = cache_lookup(*cache, lambda, threshold);
        if (look.kind == CacheLookup::Kind::hit) {
            const CacheEntry& e = cache->at(*look.entry);
            policy = e.policy;
            rec.z_hat = e.z_hat;
            rec.cache_hit = true;
            if (sampled) eps1_t = std::max(eps1_t, e.eps1);
        } else {
            const StationaryPolicy* warm = nullptr;
            if (cache && look.entry) warm = &cache->at(*look.entry).policy;
            else if (previous) warm = &*previous;
            const std::uint64_t stream = 2 * t;
            ResponseResult resp = variant == Variant::distance ? best_response(mdp, lambda, cfg, warm, stream)
                                                               : positive_response(mdp, lambda, cfg, warm, stream);
            ++trace.oracle_calls;
            if (sampled) trace.episodes += resp.iterations;
            if (variant == Variant::feasibility && sampled && !resp.above_threshold) {
                out.stopped = EmpiricallyInfeasible{t, lambda, resp.achieved_reward, trace.episodes};
                break;
            }
            Estimate est = estimate(mdp, resp.policy, cfg, stream + 1);
            if (sampled) eps1_t = std::max(eps1_t, est.eps1_effective);
            if (cache) cache->insert({resp.policy, est.z_hat, est.eps1_effective, t, lambda});
            rec.z_hat = std::move(est.z_hat);
            policy = std::move(resp.policy);
        }
        trace.eps1 = std::max(trace.eps1, eps1_t);
        rec.policy_id = policy_id(trace, *policy);
        const Vec z_full = rec.z_hat;
        rec.loss = -lambda.dot(z_full);
        z_sum += z_full;
        const Vec mean = z_sum / static_cast<double>(t);
        rec.running_mean = report(mean);
        rec.running_distance = report_distance(rec.running_mean);
        rec.z_hat = report(rec.z_hat);
        const double loss = rec.loss;
        const double dist = rec.running_distance;
        trace.records.push_back(std::move(rec));

        if (variant == Variant::feasibility && loss < -(eps0 + eps1_t)) {
            out.stopped = Infeasible{t, lambda, loss, -(eps0 + eps1_t)};
            break;
        }
        ogd_step(state, -z_full, domain);
        previous = std::move(policy);
        if (opts.stop_at_distance && dist <= *opts.stop_at_distance) break;
    }
    if (cache) trace.cache_hits = cache->hits() - hits_before;
    trace.final_distance = std::numeric_limits<double>::quiet_NaN();
    if (!out.stopped && !trace.records.empty())
        trace.final_distance = cone.distance(mixed_measurement(mdp, trace.mixture()));
    trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::distance ? "distance" : "feasibility"; }

std::string outcome_name(const FeasibilityOutcome& outcome) {
    switch (outcome.index()) {
        case 0: return "feasible";
        case 1: return "infeasible";
        default: return "empirically_infeasible";
    }
}

MixedPolicy RunTrace::mixture() const {
    if (records.empty()) throw InvalidArgument("RunTrace: no iterations recorded");
    std::vector<double> counts(policies.size(), 0.0);
    for (const auto& r : records) counts[r.policy_id] += 1.0;
    std::vector<MixedPolicy::Component> parts;
    const double n = static_cast<double>(records.size());
    for (std::size_t i = 0; i < policies.size(); ++i)
        if (counts[i] > 0.0) parts.push_back({policies[i], counts[i] / n});
    return MixedPolicy(std::move(parts));
}

double default_eta(double b, double gamma, double eps1, std::size_t rounds) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("default_eta: gamma must be in (0, 1)");
    if (rounds < 1) throw InvalidArgument("default_eta: rounds must be >= 1");
    const double g = b / (1.0 - gamma) + eps1;
    if (!(g > 0.0)) return 1.0;  // all measurements are zero; any step works
    return 1.0 / (g * std::sqrt(static_cast<double>(rounds)));
}

double distance_bound(double b, double gamma, double eps0, double eps1, std::size_t rounds, std::optional<double> kappa,
                      std::optional<double> delta) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("distance_bound: gamma must be in (0, 1)");
    if (rounds < 1) throw InvalidArgument("distance_bound: rounds must be >= 1");
    if (!(b >= 0.0) || !(eps0 >= 0.0) || !(eps1 >= 0.0))
        throw InvalidArgument("distance_bound: B, eps0 and eps1 must be nonnegative");
    if (kappa.has_value() != delta.has_value())
        throw InvalidArgument("distance_bound: kappa and delta must be given together");
    const double root_t = std::sqrt(static_cast<double>(rounds));
    if (!kappa) return (b / (1.0 - gamma) + eps1) / root_t + eps0 + 2.0 * eps1;
    if (!(*kappa > 0.0) || !(*delta >= 0.0))
        throw InvalidArgument("distance_bound: kappa must be positive and delta nonnegative");
    return (1.0 + *delta) * (((b + *kappa) / (1.0 - gamma) + eps1) / root_t + eps0 + 2.0 * eps1);
}

AppropoRun run_appropo(const VectorMDP& mdp, const TargetSet& cone, const OracleConfig& cfg,
                       const AppropoOptions& opts, PolicyCache* cache) {
    const double eps1 = cfg.mode == OracleMode::sampled ? cfg.eps1 : 0.0;
    const double eta = opts.eta.value_or(default_eta(mdp.bound(), mdp.gamma(), eps1, std::max<std::size_t>(opts.rounds, 1)));
    LoopResult r = run_loop(
        mdp, cone, cfg, opts, cache, Variant::distance, eta, [](const Vec& z) { return z; },
        [&cone](const Vec& z) { return cone.distance(z); });
    MixedPolicy mix = r.trace.mixture();
    return {std::move(mix), std::move(r.trace)};
}

FeasibilityRun run_feasibility(const VectorMDP& mdp, const TargetSet& cone, const OracleConfig& cfg,
                               const AppropoOptions& opts, PolicyCache* cache) {
    const double eps1 = cfg.mode == OracleMode::sampled ? cfg.eps1 : 0.0;
    const double eta = opts.eta.value_or(default_eta(mdp.bound(), mdp.gamma(), eps1, std::max<std::size_t>(opts.rounds, 1)));
    LoopResult r = run_loop(
        mdp, cone, cfg, opts, cache, Variant::feasibility, eta, [](const Vec& z) { return z; },
        [&cone](const Vec& z) { return cone.distance(z); });
    if (r.stopped) return {std::move(*r.stopped), std::move(r.trace)};
    const double dist = r.trace.final_distance;
    return {Feasible{r.trace.mixture(), dist}, std::move(r.trace)};
}

GeneralRun run_general(const VectorMDP& mdp, const TargetSet& compact_set, double delta, const OracleConfig& cfg,
                       Variant variant, const AppropoOptions& opts, PolicyCache* cache) {
    if (!compact_set.is_compact()) throw InvalidArgument("run_general: target set must be compact");
    return run_general(mdp, lift(compact_set, delta), cfg, variant, opts, cache);
}

GeneralRun run_general(const VectorMDP& mdp, const LiftedCone& lifted, const OracleConfig& cfg, Variant variant,
                       const AppropoOptions& opts, PolicyCache* cache) {
    if (!lifted.base) throw InvalidArgument("run_general: lifting has no base set");
    const TargetSet& base = *lifted.base;
    if (base.dim() != mdp.dim())
        throw DimensionError("run_general: target has dimension " + std::to_string(base.dim()) +
                             ", measurements have " + std::to_string(mdp.dim()));
    const double gamma = mdp.gamma();
    const double kappa = lifted.kappa;
    const VectorMDP augmented = mdp.with_constant_coordinate((1.0 - gamma) * kappa);
    const TargetSet cone = lifted.as_set();
    const double eps1 = cfg.mode == OracleMode::sampled ? cfg.eps1 : 0.0;
    const std::size_t rounds = std::max<std::size_t>(opts.rounds, 1);
    const double eta = opts.eta.value_or(1.0 / (((mdp.bound() + kappa) / (1.0 - gamma) + eps1) *
                                                std::sqrt(static_cast<double>(rounds))));
    const auto d = static_cast<Eigen::Index>(mdp.dim());

    LoopResult r = run_loop(
        augmented, cone, cfg, opts, cache, variant, eta, [d](const Vec& z) { return Vec(z.head(d)); },
        [&base](const Vec& z) { return base.distance(z); });

    GeneralRun out{variant, lifted, std::nullopt, std::nullopt, Vec(), 0.0, 0.0, 0.0, std::move(r.trace)};
    // lifted.delta is the smallest delta this kappa is valid for
    out.bound = distance_bound(mdp.bound(), gamma, out.trace.eps0, out.trace.eps1, std::max<std::size_t>(out.trace.rounds(), 1),
                               kappa, lifted.delta);
    if (r.stopped) {
        out.outcome = std::move(*r.stopped);
        out.distance = out.lifted_distance = std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    MixedPolicy mix = out.trace.mixture();
    const Vec z_aug = mixed_measurement(augmented, mix);
    out.measurement = z_aug.head(d);
    out.distance = base.distance(out.measurement);
    out.lifted_distance = cone.distance(z_aug);
    out.trace.final_distance = out.distance;
    if (variant == Variant::feasibility) out.outcome = Feasible{mix, out.distance};
    out.policy = std::move(mix);
    return out;
}

MaximizeResult maximize_reward(const VectorMDP& mdp, const TargetSet& base, const OracleConfig& cfg,
                               const MaximizeOptions& opts) {
    if (!(opts.lo <= opts.hi)) throw InvalidArgument("maximize_reward: lo must not exceed hi");
    if (opts.reward_coord >= mdp.dim()) throw InvalidArgument("maximize_reward: reward coordinate out of range");
    if (!base.is_compact()) throw InvalidArgument("maximize_reward: base constraints must be compact");
    if (base.dim() != mdp.dim()) throw DimensionError("maximize_reward: base set has the wrong dimension");
    if (!(opts.delta > 0.0)) throw InvalidArgument("maximize_reward: delta must be positive");

    // Every threshold set lies inside `base`, so kappa sized for base is large
    // enough for all of them and cached estimates stay valid across steps.
    const double base_norm = base.max_norm();
    const double kappa = base_norm > 0.0 ? base_norm / std::sqrt(2.0 * opts.delta) : 1.0;
    Vec e = Vec::Zero(static_cast<Eigen::Index>(mdp.dim()));
    e(static_cast<Eigen::Index>(opts.reward_coord)) = -1.0;

    MaximizeResult out;
    AppropoOptions run = opts.run;
    run.use_cache = true;

    auto attempt = [&](double b) {
        const TargetSet target = base.with_halfspace(e, -b);
        const LiftedCone lifted = lift_with_kappa(target, kappa);
        GeneralRun g = run_general(mdp, lifted, cfg, Variant::feasibility, run, &out.cache);
        BisectionStep step;
        step.threshold = b;
        step.outcome = outcome_name(*g.outcome);
        step.feasible = std::holds_alternative<Feasible>(*g.outcome);
        step.oracle_calls = g.trace.oracle_calls;
        step.cache_hits = g.trace.cache_hits;
        step.distance = g.distance;
        step.bound = g.bound;
        out.oracle_calls += step.oracle_calls;
        out.cache_hits += step.cache_hits;
        out.steps.push_back(step);
        return g;
    };

    double lo = opts.lo;
    double hi = opts.hi;
    bool found = false;
    for (std::size_t k = 0; k < opts.steps; ++k) {
        const double mid = 0.5 * (lo + hi);
        GeneralRun g = attempt(mid);
        if (std::holds_alternative<Feasible>(*g.outcome)) {
            lo = mid;
            found = true;
            out.policy = std::move(g.policy);
            out.trace = std::move(g.trace);
        } else {
            hi = mid;
            if (!found) out.trace = std::move(g.trace);
        }
    }
    out.threshold = lo;
    if (!found) {
        // nothing above the floor was feasible; check the floor itself
        GeneralRun g = attempt(opts.lo);
        out.trace = std::move(g.trace);
        if (std::holds_alternative<Feasible>(*g.outcome)) {
            out.policy = std::move(g.policy);
        } else {
            out.infeasible_at_floor = true;
        }
        out.threshold = opts.lo;
    }
    return out;
}

}  // namespace appropo

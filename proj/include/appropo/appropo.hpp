#pragma once

#include "appropo/common.hpp"
#include "appropo/convex.hpp"
#include "appropo/mdp.hpp"
#include "appropo/oracles.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace appropo {

enum class Variant { distance, feasibility };

std::string to_string(Variant v);

struct AppropoOptions {
    std::size_t rounds = 1000;
    /// Defaults to (B/(1-gamma) + eps1)^-1 T^-1/2.
    std::optional<double> eta;
    bool use_cache = false;
    /// Random policies placed in a fresh cache.
    std::size_t cache_seed_policies = 5;
    /// Hit threshold; defaults to the oracle's eps0. A hit is treated as an
    /// eps0-response with eps0 equal to this threshold.
    std::optional<double> cache_threshold;
    /// Stop once the running distance falls to this value. Off by default.
    std::optional<double> stop_at_distance;
};

struct IterationRecord {
    std::size_t t = 0;  // 1-based
    Vec lambda;
    std::size_t policy_id = 0;
    Vec z_hat;
    /// l_t(lambda_t) = -lambda_t . z_hat_t.
    double loss = 0.0;
    Vec running_mean;
    double running_distance = 0.0;
    bool cache_hit = false;
};

struct RunTrace {
    std::vector<IterationRecord> records;
    /// Distinct policies; records refer to them by index.
    std::vector<StationaryPolicy> policies;
    double eta = 0.0;
    /// Suboptimality and estimation error the guarantee is stated with.
    double eps0 = 0.0;
    double eps1 = 0.0;
    double bound_b = 0.0;
    double gamma = 0.0;
    std::size_t oracle_calls = 0;
    std::size_t episodes = 0;
    std::size_t cache_hits = 0;
    double wall_seconds = 0.0;
    /// Exact distance of the returned mixture; NaN if none was returned.
    double final_distance = 0.0;

    std::size_t rounds() const { return records.size(); }
    /// Uniform mixture over the played policies (duplicates merged).
    MixedPolicy mixture() const;
};

struct AppropoRun {
    MixedPolicy policy;
    RunTrace trace;
};

struct Feasible {
    MixedPolicy policy;
    double distance = 0.0;
};

struct Infeasible {
    std::size_t iteration = 0;
    Vec witness;
    double loss = 0.0;
    double threshold = 0.0;  // -(eps0 + eps1)
};

/// The sampled positive-response oracle did not reach its threshold.
struct EmpiricallyInfeasible {
    std::size_t iteration = 0;
    Vec lambda;
    double trailing_mean = 0.0;
    std::size_t episodes = 0;
};

using FeasibilityOutcome = std::variant<Feasible, Infeasible, EmpiricallyInfeasible>;

std::string outcome_name(const FeasibilityOutcome& outcome);

struct FeasibilityRun {
    FeasibilityOutcome outcome;
    RunTrace trace;
};

/// Distance minimization toward a cone with best-response and estimation oracles.
AppropoRun run_appropo(const VectorMDP& mdp, const TargetSet& cone, const OracleConfig& cfg,
                       const AppropoOptions& opts = {}, PolicyCache* cache = nullptr);

/// Feasibility search toward a cone with the positive-response oracle.
FeasibilityRun run_feasibility(const VectorMDP& mdp, const TargetSet& cone, const OracleConfig& cfg,
                               const AppropoOptions& opts = {}, PolicyCache* cache = nullptr);

struct GeneralRun {
    Variant variant = Variant::distance;
    LiftedCone lifted;
    /// Present for the feasibility variant.
    std::optional<FeasibilityOutcome> outcome;
    /// Present unless infeasibility was reported.
    std::optional<MixedPolicy> policy;
    /// z(mu) on the original coordinates.
    Vec measurement;
    /// dist(z(mu), C) and dist(z(mu) (+) kappa, C-tilde).
    double distance = 0.0;
    double lifted_distance = 0.0;
    /// Right-hand side of the lifted bound, without the min-distance term.
    double bound = 0.0;
    /// Trace on the augmented problem, with the constant coordinate removed from z_hat.
    RunTrace trace;
};

/// Handles a compact target by lifting it to a cone one dimension higher.
GeneralRun run_general(const VectorMDP& mdp, const TargetSet& compact_set, double delta, const OracleConfig& cfg,
                       Variant variant, const AppropoOptions& opts = {}, PolicyCache* cache = nullptr);

/// Same, with a prebuilt lifting (e.g. a fixed kappa shared across calls).
GeneralRun run_general(const VectorMDP& mdp, const LiftedCone& lifted, const OracleConfig& cfg, Variant variant,
                       const AppropoOptions& opts = {}, PolicyCache* cache = nullptr);

struct MaximizeOptions {
    std::size_t reward_coord = 0;
    double lo = 0.0;
    double hi = 1.0;
    std::size_t steps = 8;
    double delta = 0.5;
    AppropoOptions run;
};

struct BisectionStep {
    double threshold = 0.0;
    std::string outcome;
    bool feasible = false;
    std::size_t oracle_calls = 0;
    std::size_t cache_hits = 0;
    double distance = 0.0;
    double bound = 0.0;
};

struct MaximizeResult {
    /// True when even the floor `lo` was reported infeasible.
    bool infeasible_at_floor = false;
    double threshold = 0.0;
    std::optional<MixedPolicy> policy;
    std::vector<BisectionStep> steps;
    std::size_t oracle_calls = 0;
    std::size_t cache_hits = 0;
    PolicyCache cache;
    /// Trace of the run that produced `policy` (or of the last run if none did).
    std::optional<RunTrace> trace;
};

/// Bisection on a lower bound for one measurement coordinate, with a policy
/// cache shared across steps. The target at threshold b is base with
/// z[reward_coord] >= b added.
MaximizeResult maximize_reward(const VectorMDP& mdp, const TargetSet& base, const OracleConfig& cfg,
                               const MaximizeOptions& opts);

/**
 * Guaranteed distance excess over the best mixed policy:
 * (B/(1-gamma) + eps1) T^-1/2 + eps0 + 2 eps1, or with kappa and delta given,
 * (1+delta)(((B+kappa)/(1-gamma) + eps1) T^-1/2 + eps0 + 2 eps1).
 */
double distance_bound(double b, double gamma, double eps0, double eps1, std::size_t rounds,
                      std::optional<double> kappa = std::nullopt, std::optional<double> delta = std::nullopt);

/// Default step size (G)^-1 T^-1/2 with G = B/(1-gamma) + eps1.
double default_eta(double b, double gamma, double eps1, std::size_t rounds);

}  // namespace appropo

#pragma once

#include "appropo/common.hpp"
#include "appropo/mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace appropo {

enum class OracleMode { exact, sampled };

std::string to_string(OracleMode mode);

/**
 * Oracle settings. In exact mode the oracles plan with the known model
 * (value iteration and linear solves) and the declared eps0 / eps1 are
 * ignored: eps0 follows from `vi_tolerance`, eps1 is zero. In sampled mode
 * they learn from trajectories (Q-learning, Monte-Carlo rollouts).
 */
struct OracleConfig {
    OracleMode mode = OracleMode::exact;
    double eps0 = 0.0;
    double eps1 = 0.0;
    /// Window for the trailing average of episode returns.
    std::size_t trailing_n = 20;
    /// Positive-response threshold: stop once the trailing mean is >= -trailing_eps.
    double trailing_eps = 0.0;
    std::size_t max_episodes = 5000;
    double vi_tolerance = 1e-10;
    std::size_t vi_max_iterations = 1'000'000;
    std::size_t estimate_rollouts = 1000;
    /// Rollout and episode length; 0 selects default_horizon(gamma, B).
    std::size_t horizon = 0;
    double learning_rate = 0.1;
    double exploration = 0.1;
    /// Initial Q bonus given to the warm-start policy's actions.
    double warm_start_bias = 1e-3;
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    bool operator==(const OracleConfig&) const = default;
    void validate() const;
    std::size_t rollout_horizon(const VectorMDP& mdp) const;
    /// Suboptimality guaranteed by the best-response oracle.
    double best_response_eps0(const VectorMDP& mdp) const;
};

struct ResponseResult {
    StationaryPolicy policy;
    /// Exact mode: exact long-term reward of `policy`. Sampled mode: trailing mean of episode returns.
    double achieved_reward = 0.0;
    /// Positive response only: false when the threshold was not reached.
    bool above_threshold = true;
    std::size_t iterations = 0;  // value-iteration sweeps or episodes
};

/// Approximately optimal policy for the scalar reward r = -lambda . z.
ResponseResult best_response(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                             const StationaryPolicy* warm_start = nullptr, std::uint64_t stream = 0);

/// Policy with reward >= -eps0 whenever some policy has nonnegative reward.
ResponseResult positive_response(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                                 const StationaryPolicy* warm_start = nullptr, std::uint64_t stream = 0);

struct Estimate {
    Vec z_hat;
    double eps1_effective = 0.0;
};

/// Estimate of the long-term measurement of `policy`.
Estimate estimate(const VectorMDP& mdp, const StationaryPolicy& policy, const OracleConfig& cfg,
                  std::uint64_t stream = 0);

struct CacheEntry {
    StationaryPolicy policy;
    Vec z_hat;
    double eps1 = 0.0;
    std::size_t iteration = 0;
    Vec lambda;  // lambda the policy was computed for; empty for seeded entries
};

struct CacheLookup {
    enum class Kind { hit, miss };
    Kind kind = Kind::miss;
    /// Hit: the qualifying entry. Miss: the best entry for warm starting (none if empty).
    std::optional<std::size_t> entry;
};

/// Append-only store of returned policies with their measurement estimates.
class PolicyCache {
public:
    PolicyCache() = default;

    /// Cache seeded with `count` uniformly random deterministic policies.
    static PolicyCache with_random_policies(const VectorMDP& mdp, std::size_t count, const OracleConfig& cfg,
                                            std::uint64_t seed);

    std::size_t insert(CacheEntry entry);
    const std::vector<CacheEntry>& entries() const { return entries_; }
    const CacheEntry& at(std::size_t i) const { return entries_.at(i); }
    std::size_t size() const { return entries_.size(); }

    std::size_t hits() const { return hits_; }
    std::size_t misses() const { return misses_; }
    void record(CacheLookup::Kind kind) { kind == CacheLookup::Kind::hit ? ++hits_ : ++misses_; }

    /// Columns: policy_id, zhat_0..zhat_{d-1}, eps1, iteration, lambda_0..lambda_{d-1}.
    void write_csv(std::ostream& out) const;

private:
    std::vector<CacheEntry> entries_;
    std::size_t hits_ = 0;
    std::size_t misses_ = 0;
};

/// Looks for an entry with -lambda . z_hat >= -threshold and records the outcome.
CacheLookup cache_lookup(PolicyCache& cache, const Vec& lambda, double threshold);

}  // namespace appropo

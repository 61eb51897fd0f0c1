#pragma once

#include "appropo/common.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace appropo {

/// One point of a finite-support measurement distribution.
struct MeasurementOutcome {
    double prob = 0.0;
    Vec z;
};

/**
 * Tabular MDP emitting a d-dimensional measurement vector on every step.
 *
 * Transitions and mean measurements are stored row-per-(state, action),
 * with row index `s * num_actions + a`. Optionally each (s, a) carries a
 * finite-support measurement distribution; samples are drawn i.i.d. from it
 * on every visit. Immutable after construction.
 */
class VectorMDP {
public:
    /// `bound` defaults to the largest measurement norm over all supports.
    VectorMDP(Vec initial_dist, Mat transition, Mat measurement_mean, double gamma,
              std::optional<double> bound = std::nullopt,
              std::vector<std::vector<MeasurementOutcome>> noise = {});

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }
    std::size_t dim() const { return static_cast<std::size_t>(mean_.cols()); }
    double gamma() const { return gamma_; }
    double bound() const { return bound_; }

    std::size_t index(std::size_t s, std::size_t a) const { return s * num_actions_ + a; }

    const Vec& initial_dist() const { return initial_; }
    const Mat& transition() const { return transition_; }
    const Mat& measurement_mean() const { return mean_; }
    auto next_state_probs(std::size_t s, std::size_t a) const {
        return transition_.row(static_cast<Eigen::Index>(index(s, a)));
    }
    auto measurement(std::size_t s, std::size_t a) const {
        return mean_.row(static_cast<Eigen::Index>(index(s, a)));
    }
    bool has_noise() const { return !noise_.empty(); }
    /// Finite support for (s, a); empty when the measurement is deterministic.
    std::span<const MeasurementOutcome> noise(std::size_t s, std::size_t a) const;

    /// Largest norm among all measurement vectors that can be emitted.
    double max_measurement_norm() const;

    /// Copy with the constant `value` appended to every measurement.
    VectorMDP with_constant_coordinate(double value) const;

    /// Copy keeping only the listed measurement coordinates.
    VectorMDP with_coordinates(const std::vector<std::size_t>& coords) const;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    Vec initial_;
    Mat transition_;
    Mat mean_;
    double gamma_ = 0.0;
    double bound_ = 0.0;
    std::vector<std::vector<MeasurementOutcome>> noise_;
};

/// Per-state action distributions; rows are probability vectors.
class StationaryPolicy {
public:
    explicit StationaryPolicy(Mat action_probs);

    static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);
    static StationaryPolicy deterministic(const std::vector<std::size_t>& actions, std::size_t num_actions);

    std::size_t num_states() const { return static_cast<std::size_t>(probs_.rows()); }
    std::size_t num_actions() const { return static_cast<std::size_t>(probs_.cols()); }
    const Mat& action_probs() const { return probs_; }
    double prob(std::size_t s, std::size_t a) const {
        return probs_(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(a));
    }
    bool is_deterministic() const;
    /// Action with the highest probability in `s` (lowest index on ties).
    std::size_t greedy_action(std::size_t s) const;

    void check_compatible(const VectorMDP& mdp) const;

    friend bool operator==(const StationaryPolicy& a, const StationaryPolicy& b) {
        return a.probs_.rows() == b.probs_.rows() && a.probs_.cols() == b.probs_.cols() &&
               a.probs_ == b.probs_;
    }

private:
    Mat probs_;
};

/// Finite convex combination of stationary policies.
class MixedPolicy {
public:
    struct Component {
        StationaryPolicy policy;
        double weight;
    };

    explicit MixedPolicy(std::vector<Component> components);

    /// Uniform mixture; identical action tables are merged and their weights summed.
    static MixedPolicy uniform(const std::vector<StationaryPolicy>& policies);

    const std::vector<Component>& components() const { return components_; }
    std::size_t size() const { return components_.size(); }

private:
    std::vector<Component> components_;
};

struct TrajectoryStep {
    std::size_t state;
    std::size_t action;
    Vec z;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    std::size_t horizon = 0;
    Vec discounted_sum;
};

/// Discounted state occupancy: solves d = beta + gamma * P_pi' d.
Vec state_occupancy(const VectorMDP& mdp, const StationaryPolicy& policy);

/// Exact long-term measurement E[sum_i gamma^i z_i | pi].
Vec long_term_measurement(const VectorMDP& mdp, const StationaryPolicy& policy);

/// Weighted sum of the components' long-term measurements.
Vec mixed_measurement(const VectorMDP& mdp, const MixedPolicy& mixed);

/// State values for a scalar reward given per (s, a) row.
Vec policy_values(const VectorMDP& mdp, const StationaryPolicy& policy, const Vec& reward);

/// beta' V for a scalar reward given per (s, a) row.
double long_term_reward(const VectorMDP& mdp, const StationaryPolicy& policy, const Vec& reward);

/// Scalar reward r(s, a) = -lambda . z(s, a), one entry per (s, a) row.
Vec scalarized_reward(const VectorMDP& mdp, const Vec& lambda);

/// Smallest H with gamma^H * bound / (1 - gamma) <= tol.
std::size_t default_horizon(double gamma, double bound, double tol = 1e-3);

/// Samples one trajectory of length `horizon` starting from s_0 ~ beta.
Trajectory sample_trajectory(const VectorMDP& mdp, const StationaryPolicy& policy, std::size_t horizon,
                             std::uint64_t seed);

/// Same as above but drawing from an existing random source.
Trajectory sample_trajectory(const VectorMDP& mdp, const StationaryPolicy& policy, std::size_t horizon,
                             Rng& rng);

}  // namespace appropo

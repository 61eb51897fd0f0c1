#include "appropo/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace appropo {
namespace {

constexpr double kProbTol = 1e-12;
constexpr Eigen::Index kDenseSolveLimit = 500;

void check_probability_vector(const Eigen::Ref<const Eigen::RowVectorXd>& row, const std::string& what) {
    if (!row.allFinite() || (row.array() < 0.0).any())
        throw InvalidArgument(what + ": probabilities must be finite and nonnegative");
    if (std::abs(row.sum() - 1.0) > kProbTol)
        throw InvalidArgument(what + ": probabilities sum to " + format_double(row.sum()) + ", expected 1");
}

// Solves (I - gamma * M) x = b where M is row-stochastic or its transpose.
Vec solve_discounted(const Mat& m, const Vec& b, double gamma) {
    const Eigen::Index n = b.size();
    if (n < kDenseSolveLimit) {
        Mat a = Mat::Identity(n, n) - gamma * m;
        return a.partialPivLu().solve(b);
    }
    // fixed point x = b + gamma M x; ||x - x*|| <= gamma / (1 - gamma) * ||step||
    Vec x = b;
    const double stop = 1e-12 * (1.0 - gamma) / gamma;
    for (int it = 0; it < 1000000; ++it) {
        Vec next = b + gamma * (m * x);
        const double step = (next - x).cwiseAbs().maxCoeff();
        x.swap(next);
        if (step <= stop * std::max(1.0, x.cwiseAbs().maxCoeff())) return x;
    }
    throw Error("solve_discounted: fixed-point iteration did not converge");
}

Mat policy_transition(const VectorMDP& mdp, const StationaryPolicy& policy) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    Mat p = Mat::Zero(ns, ns);
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double pa = policy.prob(s, a);
            if (pa != 0.0) p.row(static_cast<Eigen::Index>(s)) += pa * mdp.next_state_probs(s, a);
        }
    return p;
}

}  // namespace

VectorMDP::VectorMDP(Vec initial_dist, Mat transition, Mat measurement_mean, double gamma,
                     std::optional<double> bound, std::vector<std::vector<MeasurementOutcome>> noise)
    : initial_(std::move(initial_dist)),
      transition_(std::move(transition)),
      mean_(std::move(measurement_mean)),
      gamma_(gamma),
      noise_(std::move(noise)) {
    num_states_ = static_cast<std::size_t>(initial_.size());
    if (num_states_ == 0) throw InvalidArgument("VectorMDP: need at least one state");
    if (transition_.cols() != initial_.size() || transition_.rows() % initial_.size() != 0 ||
        transition_.rows() == 0)
        throw DimensionError("VectorMDP: transition must have |S|*|A| rows and |S| columns");
    num_actions_ = static_cast<std::size_t>(transition_.rows()) / num_states_;
    if (mean_.rows() != transition_.rows() || mean_.cols() == 0)
        throw DimensionError("VectorMDP: measurement table must have |S|*|A| rows and d >= 1 columns");
    if (!(gamma_ > 0.0 && gamma_ < 1.0)) throw InvalidArgument("VectorMDP: gamma must lie in (0, 1)");
    if (!mean_.allFinite()) throw InvalidArgument("VectorMDP: measurements must be finite");

    check_probability_vector(initial_.transpose(), "VectorMDP initial distribution");
    for (Eigen::Index r = 0; r < transition_.rows(); ++r)
        check_probability_vector(transition_.row(r),
                                 "VectorMDP transition row (s=" + std::to_string(r / static_cast<Eigen::Index>(num_actions_)) +
                                     ", a=" + std::to_string(r % static_cast<Eigen::Index>(num_actions_)) + ")");

    if (!noise_.empty()) {
        if (noise_.size() != static_cast<std::size_t>(mean_.rows()))
            throw DimensionError("VectorMDP: noise table must have one entry per (s, a)");
        for (std::size_t r = 0; r < noise_.size(); ++r) {
            if (noise_[r].empty()) continue;
            Vec m = Vec::Zero(mean_.cols());
            double total = 0.0;
            for (const auto& o : noise_[r]) {
                if (o.z.size() != mean_.cols()) throw DimensionError("VectorMDP: noise outcome has wrong dimension");
                if (!(o.prob >= 0.0)) throw InvalidArgument("VectorMDP: noise probabilities must be nonnegative");
                total += o.prob;
                m += o.prob * o.z;
            }
            if (std::abs(total - 1.0) > kProbTol) throw InvalidArgument("VectorMDP: noise probabilities must sum to 1");
            if ((m.transpose() - mean_.row(static_cast<Eigen::Index>(r))).cwiseAbs().maxCoeff() > 1e-9)
                throw InvalidArgument("VectorMDP: measurement mean does not match its noise support");
        }
    }

    const double attained = max_measurement_norm();
    if (bound) {
        if (!(*bound >= attained * (1.0 - 1e-12))) throw InvalidArgument("VectorMDP: bound is below a measurement norm");
        bound_ = *bound;
    } else {
        bound_ = attained;
    }
}

std::span<const MeasurementOutcome> VectorMDP::noise(std::size_t s, std::size_t a) const {
    if (noise_.empty()) return {};
    return noise_[index(s, a)];
}

double VectorMDP::max_measurement_norm() const {
    double best = 0.0;
    for (Eigen::Index r = 0; r < mean_.rows(); ++r) {
        const auto ur = static_cast<std::size_t>(r);
        if (!noise_.empty() && !noise_[ur].empty()) {
            for (const auto& o : noise_[ur])
                if (o.prob > 0.0) best = std::max(best, o.z.norm());
        } else {
            best = std::max(best, mean_.row(r).norm());
        }
    }
    return best;
}

VectorMDP VectorMDP::with_constant_coordinate(double value) const {
    Mat mean(mean_.rows(), mean_.cols() + 1);
    mean.leftCols(mean_.cols()) = mean_;
    mean.col(mean_.cols()).setConstant(value);
    std::vector<std::vector<MeasurementOutcome>> noise = noise_;
    for (auto& row : noise)
        for (auto& o : row) {
            Vec z(o.z.size() + 1);
            z << o.z, value;
            o.z = std::move(z);
        }
    return VectorMDP(initial_, transition_, std::move(mean), gamma_, std::nullopt, std::move(noise));
}

VectorMDP VectorMDP::with_coordinates(const std::vector<std::size_t>& coords) const {
    if (coords.empty()) throw InvalidArgument("with_coordinates: need at least one coordinate");
    Mat mean(mean_.rows(), static_cast<Eigen::Index>(coords.size()));
    for (std::size_t j = 0; j < coords.size(); ++j) {
        if (coords[j] >= dim()) throw DimensionError("with_coordinates: coordinate out of range");
        mean.col(static_cast<Eigen::Index>(j)) = mean_.col(static_cast<Eigen::Index>(coords[j]));
    }
    std::vector<std::vector<MeasurementOutcome>> noise = noise_;
    for (auto& row : noise)
        for (auto& o : row) {
            Vec z(static_cast<Eigen::Index>(coords.size()));
            for (std::size_t j = 0; j < coords.size(); ++j)
                z(static_cast<Eigen::Index>(j)) = o.z(static_cast<Eigen::Index>(coords[j]));
            o.z = std::move(z);
        }
    return VectorMDP(initial_, transition_, std::move(mean), gamma_, std::nullopt, std::move(noise));
}

StationaryPolicy::StationaryPolicy(Mat action_probs) : probs_(std::move(action_probs)) {
    if (probs_.rows() == 0 || probs_.cols() == 0) throw InvalidArgument("StationaryPolicy: empty action table");
    for (Eigen::Index s = 0; s < probs_.rows(); ++s)
        check_probability_vector(probs_.row(s), "StationaryPolicy row " + std::to_string(s));
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
    return StationaryPolicy(Mat::Constant(static_cast<Eigen::Index>(num_states), static_cast<Eigen::Index>(num_actions),
                                          1.0 / static_cast<double>(num_actions)));
}

StationaryPolicy StationaryPolicy::deterministic(const std::vector<std::size_t>& actions, std::size_t num_actions) {
    Mat p = Mat::Zero(static_cast<Eigen::Index>(actions.size()), static_cast<Eigen::Index>(num_actions));
    for (std::size_t s = 0; s < actions.size(); ++s) {
        if (actions[s] >= num_actions) throw InvalidArgument("StationaryPolicy: action index out of range");
        p(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    }
    return StationaryPolicy(std::move(p));
}

bool StationaryPolicy::is_deterministic() const {
    for (Eigen::Index s = 0; s < probs_.rows(); ++s)
        if (probs_.row(s).maxCoeff() != 1.0) return false;
    return true;
}

std::size_t StationaryPolicy::greedy_action(std::size_t s) const {
    Eigen::Index best = 0;
    probs_.row(static_cast<Eigen::Index>(s)).maxCoeff(&best);
    return static_cast<std::size_t>(best);
}

void StationaryPolicy::check_compatible(const VectorMDP& mdp) const {
    if (num_states() != mdp.num_states() || num_actions() != mdp.num_actions())
        throw DimensionError("policy is " + std::to_string(num_states()) + "x" + std::to_string(num_actions()) +
                             " but the MDP has " + std::to_string(mdp.num_states()) + " states and " +
                             std::to_string(mdp.num_actions()) + " actions");
}

MixedPolicy::MixedPolicy(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw InvalidArgument("MixedPolicy: need at least one component");
    double total = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight >= 0.0)) throw InvalidArgument("MixedPolicy: weights must be nonnegative");
        if (c.policy.num_states() != components_.front().policy.num_states() ||
            c.policy.num_actions() != components_.front().policy.num_actions())
            throw DimensionError("MixedPolicy: components have different shapes");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > kProbTol) throw InvalidArgument("MixedPolicy: weights must sum to 1");
}

MixedPolicy MixedPolicy::uniform(const std::vector<StationaryPolicy>& policies) {
    if (policies.empty()) throw InvalidArgument("MixedPolicy::uniform: no policies");
    std::vector<Component> comps;
    std::vector<std::size_t> counts;
    for (const auto& p : policies) {
        auto it = std::find_if(comps.begin(), comps.end(), [&](const Component& c) { return c.policy == p; });
        if (it == comps.end()) {
            comps.push_back({p, 0.0});
            counts.push_back(1);
        } else {
            ++counts[static_cast<std::size_t>(it - comps.begin())];
        }
    }
    const double n = static_cast<double>(policies.size());
    double assigned = 0.0;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        comps[i].weight = static_cast<double>(counts[i]) / n;
        assigned += comps[i].weight;
    }
    comps.back().weight += 1.0 - assigned;
    return MixedPolicy(std::move(comps));
}

Vec state_occupancy(const VectorMDP& mdp, const StationaryPolicy& policy) {
    policy.check_compatible(mdp);
    const Mat p = policy_transition(mdp, policy);
    return solve_discounted(p.transpose(), mdp.initial_dist(), mdp.gamma());
}

Vec long_term_measurement(const VectorMDP& mdp, const StationaryPolicy& policy) {
    const Vec occ = state_occupancy(mdp, policy);
    Vec z = Vec::Zero(static_cast<Eigen::Index>(mdp.dim()));
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
            const double w = occ(static_cast<Eigen::Index>(s)) * policy.prob(s, a);
            if (w != 0.0) z += w * mdp.measurement(s, a).transpose();
        }
    return z;
}

Vec mixed_measurement(const VectorMDP& mdp, const MixedPolicy& mixed) {
    Vec z = Vec::Zero(static_cast<Eigen::Index>(mdp.dim()));
    for (const auto& c : mixed.components()) z += c.weight * long_term_measurement(mdp, c.policy);
    return z;
}

Vec policy_values(const VectorMDP& mdp, const StationaryPolicy& policy, const Vec& reward) {
    policy.check_compatible(mdp);
    if (reward.size() != static_cast<Eigen::Index>(mdp.num_states() * mdp.num_actions()))
        throw DimensionError("policy_values: reward must have one entry per (s, a)");
    Vec r_pi = Vec::Zero(static_cast<Eigen::Index>(mdp.num_states()));
    for (std::size_t s = 0; s < mdp.num_states(); ++s)
        for (std::size_t a = 0; a < mdp.num_actions(); ++a)
            r_pi(static_cast<Eigen::Index>(s)) += policy.prob(s, a) * reward(static_cast<Eigen::Index>(mdp.index(s, a)));
    return solve_discounted(policy_transition(mdp, policy), r_pi, mdp.gamma());
}

double long_term_reward(const VectorMDP& mdp, const StationaryPolicy& policy, const Vec& reward) {
    return mdp.initial_dist().dot(policy_values(mdp, policy, reward));
}

Vec scalarized_reward(const VectorMDP& mdp, const Vec& lambda) {
    if (lambda.size() != static_cast<Eigen::Index>(mdp.dim()))
        throw DimensionError("scalarized_reward: lambda has dimension " + std::to_string(lambda.size()) +
                             ", MDP measurements have " + std::to_string(mdp.dim()));
    return -(mdp.measurement_mean() * lambda);
}

std::size_t default_horizon(double gamma, double bound, double tol) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("default_horizon: gamma must lie in (0, 1)");
    const double scale = bound / (1.0 - gamma);
    if (scale <= tol) return 1;
    const double h = std::ceil(std::log(tol / scale) / std::log(gamma));
    auto horizon = static_cast<std::size_t>(std::max(1.0, h));
    // guard against rounding in log
    while (std::pow(gamma, static_cast<double>(horizon)) * scale > tol) ++horizon;
    while (horizon > 1 && std::pow(gamma, static_cast<double>(horizon - 1)) * scale <= tol) --horizon;
    return horizon;
}

Trajectory sample_trajectory(const VectorMDP& mdp, const StationaryPolicy& policy, std::size_t horizon,
                             std::uint64_t seed) {
    Rng rng(seed);
    return sample_trajectory(mdp, policy, horizon, rng);
}

Trajectory sample_trajectory(const VectorMDP& mdp, const StationaryPolicy& policy, std::size_t horizon, Rng& rng) {
    policy.check_compatible(mdp);
    if (horizon == 0) throw InvalidArgument("sample_trajectory: horizon must be at least 1");
    Trajectory traj;
    traj.horizon = horizon;
    traj.steps.reserve(horizon);
    traj.discounted_sum = Vec::Zero(static_cast<Eigen::Index>(mdp.dim()));
    const auto& pi = policy.action_probs();
    std::size_t s = rng.categorical(mdp.initial_dist(), mdp.num_states());
    double discount = 1.0;
    for (std::size_t i = 0; i < horizon; ++i) {
        const std::size_t a = rng.categorical(pi.row(static_cast<Eigen::Index>(s)), mdp.num_actions());
        Vec z;
        const auto support = mdp.noise(s, a);
        if (support.empty()) {
            z = mdp.measurement(s, a).transpose();
        } else {
            std::vector<double> w(support.size());
            for (std::size_t k = 0; k < support.size(); ++k) w[k] = support[k].prob;
            z = support[rng.categorical(w, w.size())].z;
        }
        traj.discounted_sum += discount * z;
        discount *= mdp.gamma();
        const std::size_t next = rng.categorical(mdp.next_state_probs(s, a), mdp.num_states());
        traj.steps.push_back({s, a, std::move(z)});
        s = next;
    }
    return traj;
}

}  // namespace appropo

#include "appropo/oracles.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <numeric>
#include <ostream>
#include <thread>

namespace appropo {
namespace {

constexpr std::size_t kRolloutChunk = 64;

void check_lambda(const VectorMDP& mdp, const Vec& lambda) {
    if (static_cast<std::size_t>(lambda.size()) != mdp.dim())
        throw DimensionError("oracle: lambda has dimension " + std::to_string(lambda.size()) + ", expected " +
                             std::to_string(mdp.dim()));
    if (!lambda.allFinite()) throw InvalidArgument("oracle: lambda has non-finite entries");
    if (lambda.norm() > 1.0 + 1e-9) throw InvalidArgument("oracle: lambda must lie in the unit ball");
}

std::size_t argmax_lowest(const double* q, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < n; ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

ResponseResult value_iteration(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                               const StationaryPolicy* warm_start) {
    const Vec reward = scalarized_reward(mdp, lambda);
    const std::size_t ns = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    Vec v = warm_start ? policy_values(mdp, *warm_start, reward) : Vec::Zero(static_cast<Eigen::Index>(ns));
    Vec q;
    std::size_t sweeps = 0;
    for (;; ++sweeps) {
        if (sweeps >= cfg.vi_max_iterations) throw Error("best_response: value iteration did not reach its tolerance");
        q = reward + mdp.gamma() * (mdp.transition() * v);
        Vec next(static_cast<Eigen::Index>(ns));
        for (std::size_t s = 0; s < ns; ++s)
            next(static_cast<Eigen::Index>(s)) = q.segment(static_cast<Eigen::Index>(s * na), static_cast<Eigen::Index>(na)).maxCoeff();
        const double residual = (next - v).cwiseAbs().maxCoeff();
        if (residual <= cfg.vi_tolerance) break;
        v.swap(next);
    }
    // greedy with respect to v (q was computed from v)
    std::vector<std::size_t> actions(ns);
    for (std::size_t s = 0; s < ns; ++s) actions[s] = argmax_lowest(q.data() + s * na, na);
    StationaryPolicy policy = StationaryPolicy::deterministic(actions, na);
    const double achieved = long_term_reward(mdp, policy, reward);
    return {std::move(policy), achieved, true, sweeps + 1};
}

ResponseResult q_learning(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                          const StationaryPolicy* warm_start, std::uint64_t stream, bool stop_at_threshold) {
    const std::size_t ns = mdp.num_states();
    const std::size_t na = mdp.num_actions();
    const std::size_t horizon = cfg.rollout_horizon(mdp);
    Rng rng(derive_seed(cfg.seed, stream));
    std::vector<double> q(ns * na, 0.0);
    if (warm_start) {
        warm_start->check_compatible(mdp);
        for (std::size_t s = 0; s < ns; ++s)
            for (std::size_t a = 0; a < na; ++a) q[s * na + a] = cfg.warm_start_bias * warm_start->prob(s, a);
    }
    std::deque<double> window;
    double window_sum = 0.0;
    std::vector<double> support_w;
    bool reached = false;
    std::size_t episode = 0;
    while (episode < cfg.max_episodes) {
        ++episode;
        std::size_t s = rng.categorical(mdp.initial_dist(), ns);
        double ret = 0.0;
        double discount = 1.0;
        for (std::size_t i = 0; i < horizon; ++i) {
            const double* qs = q.data() + s * na;
            const std::size_t a = rng.uniform() < cfg.exploration ? rng.index(na) : argmax_lowest(qs, na);
            double r;
            const auto support = mdp.noise(s, a);
            if (support.empty()) {
                r = -lambda.dot(mdp.measurement(s, a).transpose());
            } else {
                support_w.resize(support.size());
                for (std::size_t k = 0; k < support.size(); ++k) support_w[k] = support[k].prob;
                r = -lambda.dot(support[rng.categorical(support_w, support_w.size())].z);
            }
            const std::size_t next = rng.categorical(mdp.next_state_probs(s, a), ns);
            const double* qn = q.data() + next * na;
            const double target = r + mdp.gamma() * *std::max_element(qn, qn + na);
            q[s * na + a] += cfg.learning_rate * (target - q[s * na + a]);
            ret += discount * r;
            discount *= mdp.gamma();
            s = next;
        }
        window.push_back(ret);
        window_sum += ret;
        if (window.size() > cfg.trailing_n) {
            window_sum -= window.front();
            window.pop_front();
        }
        if (stop_at_threshold && window.size() == cfg.trailing_n &&
            window_sum / static_cast<double>(window.size()) >= -cfg.trailing_eps) {
            reached = true;
            break;
        }
    }
    std::vector<std::size_t> actions(ns);
    for (std::size_t s = 0; s < ns; ++s) actions[s] = argmax_lowest(q.data() + s * na, na);
    const double trailing = window.empty() ? 0.0 : window_sum / static_cast<double>(window.size());
    return {StationaryPolicy::deterministic(actions, na), trailing, stop_at_threshold ? reached : true, episode};
}

struct RolloutSums {
    Vec sum;
    Vec sum_sq;
};

}  // namespace

std::string to_string(OracleMode mode) { return mode == OracleMode::exact ? "exact" : "sampled"; }

void OracleConfig::validate() const {
    if (!(eps0 >= 0.0) || !(eps1 >= 0.0)) throw InvalidArgument("OracleConfig: eps0 and eps1 must be nonnegative");
    if (!(trailing_eps >= 0.0)) throw InvalidArgument("OracleConfig: trailing_eps must be nonnegative");
    if (!(vi_tolerance > 0.0)) throw InvalidArgument("OracleConfig: vi_tolerance must be positive");
    if (mode == OracleMode::sampled) {
        if (trailing_n == 0) throw InvalidArgument("OracleConfig: sampled mode needs trailing_n >= 1");
        if (max_episodes == 0) throw InvalidArgument("OracleConfig: sampled mode needs max_episodes >= 1");
        if (estimate_rollouts < 2) throw InvalidArgument("OracleConfig: sampled mode needs at least 2 rollouts");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidArgument("OracleConfig: learning_rate must be in (0, 1]");
        if (!(exploration >= 0.0 && exploration <= 1.0)) throw InvalidArgument("OracleConfig: exploration must be in [0, 1]");
    }
}

std::size_t OracleConfig::rollout_horizon(const VectorMDP& mdp) const {
    return horizon > 0 ? horizon : default_horizon(mdp.gamma(), std::max(mdp.bound(), 1e-300));
}

double OracleConfig::best_response_eps0(const VectorMDP& mdp) const {
    if (mode == OracleMode::sampled) return eps0;
    return 2.0 * mdp.gamma() * vi_tolerance / (1.0 - mdp.gamma());
}

ResponseResult best_response(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                             const StationaryPolicy* warm_start, std::uint64_t stream) {
    check_lambda(mdp, lambda);
    if (cfg.mode == OracleMode::exact) return value_iteration(mdp, lambda, cfg, warm_start);
    return q_learning(mdp, lambda, cfg, warm_start, stream, false);
}

ResponseResult positive_response(const VectorMDP& mdp, const Vec& lambda, const OracleConfig& cfg,
                                 const StationaryPolicy* warm_start, std::uint64_t stream) {
    check_lambda(mdp, lambda);
    if (cfg.mode == OracleMode::exact) {
        ResponseResult r = value_iteration(mdp, lambda, cfg, warm_start);
        r.above_threshold = r.achieved_reward >= -cfg.best_response_eps0(mdp);
        return r;
    }
    return q_learning(mdp, lambda, cfg, warm_start, stream, true);
}

Estimate estimate(const VectorMDP& mdp, const StationaryPolicy& policy, const OracleConfig& cfg, std::uint64_t stream) {
    policy.check_compatible(mdp);
    if (cfg.mode == OracleMode::exact) return {long_term_measurement(mdp, policy), 0.0};

    const std::size_t m = cfg.estimate_rollouts;
    const std::size_t horizon = cfg.rollout_horizon(mdp);
    const auto d = static_cast<Eigen::Index>(mdp.dim());
    const std::size_t chunks = (m + kRolloutChunk - 1) / kRolloutChunk;
    const std::uint64_t base = derive_seed(cfg.seed, stream ^ 0x5eed'e571'0000'0000ULL);
    std::vector<RolloutSums> partial(chunks, RolloutSums{Vec::Zero(d), Vec::Zero(d)});

    auto run_chunk = [&](std::size_t c) {
        Rng rng(derive_seed(base, c));
        const std::size_t begin = c * kRolloutChunk;
        const std::size_t end = std::min(m, begin + kRolloutChunk);
        for (std::size_t i = begin; i < end; ++i) {
            const Trajectory traj = sample_trajectory(mdp, policy, horizon, rng);
            partial[c].sum += traj.discounted_sum;
            partial[c].sum_sq += traj.discounted_sum.cwiseProduct(traj.discounted_sum);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, chunks));
    if (workers == 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
            });
        for (auto& t : pool) t.join();
    }
    Vec sum = Vec::Zero(d);
    Vec sum_sq = Vec::Zero(d);
    for (const auto& p : partial) {
        sum += p.sum;
        sum_sq += p.sum_sq;
    }
    const double n = static_cast<double>(m);
    Vec mean = sum / n;
    const Vec var = ((sum_sq - n * mean.cwiseProduct(mean)) / (n - 1.0)).cwiseMax(0.0);
    const double bias = std::pow(mdp.gamma(), static_cast<double>(horizon)) * mdp.bound() / (1.0 - mdp.gamma()) *
                        std::sqrt(static_cast<double>(d));
    const double half_width = 3.0 * std::sqrt(var.sum() / n);
    return {std::move(mean), bias + half_width};
}

PolicyCache PolicyCache::with_random_policies(const VectorMDP& mdp, std::size_t count, const OracleConfig& cfg,
                                              std::uint64_t seed) {
    PolicyCache cache;
    Rng rng(seed);
    for (std::size_t k = 0; k < count; ++k) {
        std::vector<std::size_t> actions(mdp.num_states());
        for (auto& a : actions) a = rng.index(mdp.num_actions());
        StationaryPolicy policy = StationaryPolicy::deterministic(actions, mdp.num_actions());
        Estimate est = estimate(mdp, policy, cfg, derive_seed(seed, k + 1));
        cache.insert({std::move(policy), std::move(est.z_hat), est.eps1_effective, 0, Vec()});
    }
    return cache;
}

std::size_t PolicyCache::insert(CacheEntry entry) {
    if (!entries_.empty() && entry.z_hat.size() != entries_.front().z_hat.size())
        throw DimensionError("PolicyCache: entry has a different measurement dimension");
    if (!entry.z_hat.allFinite()) throw InvalidArgument("PolicyCache: non-finite measurement estimate");
    entries_.push_back(std::move(entry));
    return entries_.size() - 1;
}

void PolicyCache::write_csv(std::ostream& out) const {
    if (entries_.empty()) {
        out << "policy_id,eps1,iteration\n";
        return;
    }
    const auto d = entries_.front().z_hat.size();
    out << "policy_id";
    for (Eigen::Index j = 0; j < d; ++j) out << ",zhat_" << j;
    out << ",eps1,iteration";
    for (Eigen::Index j = 0; j < d; ++j) out << ",lambda_" << j;
    out << '\n';
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        const auto& e = entries_[i];
        out << i;
        for (Eigen::Index j = 0; j < d; ++j) out << ',' << format_double(e.z_hat(j));
        out << ',' << format_double(e.eps1) << ',' << e.iteration;
        for (Eigen::Index j = 0; j < d; ++j) out << ',' << (e.lambda.size() == d ? format_double(e.lambda(j)) : "");
        out << '\n';
    }
}

CacheLookup cache_lookup(PolicyCache& cache, const Vec& lambda, double threshold) {
    CacheLookup out;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cache.size(); ++i) {
        const auto& e = cache.at(i);
        if (e.z_hat.size() != lambda.size()) throw DimensionError("cache_lookup: lambda has the wrong dimension");
        const double reward = -lambda.dot(e.z_hat);
        if (reward >= -threshold) {
            out.kind = CacheLookup::Kind::hit;
            out.entry = i;
            cache.record(out.kind);
            return out;
        }
        if (reward > best) {
            best = reward;
            out.entry = i;
        }
    }
    cache.record(out.kind);
    return out;
}

}  // namespace appropo

#pragma once

#include "appropo/env.hpp"
#include "appropo/mdp.hpp"

#include <vector>

namespace fixtures {

using appropo::Mat;
using appropo::Vec;
using appropo::VectorMDP;

/// One state, one action per row of `z`, self loop.
inline VectorMDP one_state(const Mat& z, double gamma) {
    const auto na = z.rows();
    return VectorMDP(Vec::Ones(1), Mat::Ones(na, 1), z, gamma);
}

inline appropo::StationaryPolicy random_stochastic_policy(std::size_t states, std::size_t actions, appropo::Rng& rng) {
    Mat p(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(actions));
    for (Eigen::Index s = 0; s < p.rows(); ++s) {
        for (Eigen::Index a = 0; a < p.cols(); ++a) p(s, a) = rng.uniform() + 0.05;
        p.row(s) /= p.row(s).sum();
    }
    return appropo::StationaryPolicy(p);
}

inline appropo::StationaryPolicy random_deterministic_policy(std::size_t states, std::size_t actions,
                                                             appropo::Rng& rng) {
    std::vector<std::size_t> acts(states);
    for (auto& a : acts) a = rng.index(actions);
    return appropo::StationaryPolicy::deterministic(acts, actions);
}

inline VectorMDP random(std::uint64_t seed, std::size_t s, std::size_t a, std::size_t d, double gamma = 0.9,
                        bool noise = false) {
    appropo::RandomMdpSpec spec;
    spec.states = s;
    spec.actions = a;
    spec.dim = d;
    spec.gamma = gamma;
    spec.noise = noise;
    return appropo::random_mdp(seed, spec);
}

inline Vec vec(std::initializer_list<double> v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

inline Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
    Mat out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double x : r) out(i, j++) = x;
        ++i;
    }
    return out;
}

}  // namespace fixtures

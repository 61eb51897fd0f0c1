#include "appropo/env.hpp"

#include <algorithm>
#include <cmath>

namespace appropo {

VectorMDP random_mdp(std::uint64_t seed, const RandomMdpSpec& spec) {
    if (spec.states < 1 || spec.states > kMaxStates) throw InvalidArgument("random_mdp: states must be in [1, 2000]");
    if (spec.actions < 1 || spec.actions > kMaxActions) throw InvalidArgument("random_mdp: actions must be in [1, 64]");
    if (spec.dim < 1 || spec.dim > kMaxDim) throw InvalidArgument("random_mdp: dim must be in [1, 128]");
    if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw InvalidArgument("random_mdp: gamma must be in (0, 1)");
    Rng rng(seed);
    const auto ns = static_cast<Eigen::Index>(spec.states);
    const auto rows = static_cast<Eigen::Index>(spec.states * spec.actions);
    const auto d = static_cast<Eigen::Index>(spec.dim);

    Vec beta(ns);
    for (Eigen::Index s = 0; s < ns; ++s) beta(s) = rng.uniform() + 1e-3;
    beta /= beta.sum();
    // cubing spreads the mass so transitions are far from uniform
    Mat p(rows, ns);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index s = 0; s < ns; ++s) {
            const double u = rng.uniform();
            p(r, s) = u * u * u;
        }
        p(r, rng.index(spec.states)) += 1.0;
        p.row(r) /= p.row(r).sum();
    }
    Mat z(rows, d);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index j = 0; j < d; ++j) z(r, j) = rng.uniform(-1.0, 1.0);

    std::vector<std::vector<MeasurementOutcome>> noise;
    if (spec.noise) {
        noise.resize(static_cast<std::size_t>(rows));
        for (Eigen::Index r = 0; r < rows; ++r) {
            Vec shift(d);
            for (Eigen::Index j = 0; j < d; ++j) shift(j) = rng.uniform(-0.5, 0.5);
            const Vec mean = z.row(r).transpose();
            noise[static_cast<std::size_t>(r)] = {{0.5, mean + shift}, {0.5, mean - shift}};
        }
    }
    return VectorMDP(std::move(beta), std::move(p), std::move(z), spec.gamma, std::nullopt, std::move(noise));
}

Gridworld gridworld(const GridworldSpec& spec) {
    const std::size_t w = spec.width;
    const std::size_t h = spec.height;
    if (w < 1 || h < 1 || w * h > kMaxStates) throw InvalidArgument("gridworld: invalid size");
    if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw InvalidArgument("gridworld: gamma must be in (0, 1)");
    if (!(spec.slip >= 0.0 && spec.slip <= 1.0)) throw InvalidArgument("gridworld: slip must be in [0, 1]");
    auto inside = [&](Cell c) { return c.first < w && c.second < h; };
    if (!inside(spec.start) || !inside(spec.goal)) throw InvalidArgument("gridworld: start or goal outside the grid");
    for (const Cell& c : spec.unsafe)
        if (!inside(c)) throw InvalidArgument("gridworld: unsafe cell outside the grid");

    const std::size_t ns = w * h;
    const std::size_t na = 4;
    const auto d = static_cast<Eigen::Index>(2 + ns);
    auto id = [w](Cell c) { return c.second * w + c.first; };
    std::vector<bool> unsafe(ns, false);
    for (const Cell& c : spec.unsafe) unsafe[id(c)] = true;
    const std::size_t goal = id(spec.goal);

    // up, right, down, left with y growing upward
    const int dx[4] = {0, 1, 0, -1};
    const int dy[4] = {1, 0, -1, 0};
    auto move = [&](std::size_t s, std::size_t a) {
        const long x = static_cast<long>(s % w) + dx[a];
        const long y = static_cast<long>(s / w) + dy[a];
        if (x < 0 || y < 0 || x >= static_cast<long>(w) || y >= static_cast<long>(h)) return s;
        return static_cast<std::size_t>(y) * w + static_cast<std::size_t>(x);
    };

    Vec beta = Vec::Zero(static_cast<Eigen::Index>(ns));
    beta(static_cast<Eigen::Index>(id(spec.start))) = 1.0;
    Mat p = Mat::Zero(static_cast<Eigen::Index>(ns * na), static_cast<Eigen::Index>(ns));
    Mat z = Mat::Zero(static_cast<Eigen::Index>(ns * na), d);
    for (std::size_t s = 0; s < ns; ++s) {
        for (std::size_t a = 0; a < na; ++a) {
            const auto r = static_cast<Eigen::Index>(s * na + a);
            if (s == goal) {
                p(r, static_cast<Eigen::Index>(s)) = 1.0;
            } else {
                for (std::size_t b = 0; b < na; ++b) {
                    const double q = b == a ? 1.0 - spec.slip : spec.slip / 3.0;
                    p(r, static_cast<Eigen::Index>(move(s, b))) += q;
                }
            }
            z(r, 0) = s == goal ? 1.0 : 0.0;
            z(r, 1) = unsafe[s] ? 1.0 : 0.0;
            z(r, static_cast<Eigen::Index>(2 + s)) = 1.0;
        }
    }
    return Gridworld{spec, VectorMDP(std::move(beta), std::move(p), std::move(z), spec.gamma)};
}

TargetSet indicator_box(std::size_t dim, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("indicator_box: gamma must be in (0, 1)");
    const auto d = static_cast<Eigen::Index>(dim);
    return TargetSet::box(Vec::Zero(d), Vec::Constant(d, 1.0 / (1.0 - gamma)));
}

TargetSet safety_preset(const Gridworld& g, double max_unsafe) {
    const std::size_t d = g.mdp.dim();
    Vec a = Vec::Zero(static_cast<Eigen::Index>(d));
    a(Gridworld::unsafe_coord) = 1.0;
    return indicator_box(d, g.spec.gamma).with_halfspace(a, max_unsafe);
}

TargetSet visitation_box_preset(const Gridworld& g, double min_visit, double max_visit) {
    if (!(min_visit <= max_visit)) throw InvalidArgument("visitation_box_preset: min_visit exceeds max_visit");
    const std::size_t d = g.mdp.dim();
    const double top = 1.0 / (1.0 - g.spec.gamma);
    Vec lo = Vec::Zero(static_cast<Eigen::Index>(d));
    Vec hi = Vec::Constant(static_cast<Eigen::Index>(d), top);
    for (std::size_t s = 0; s < g.mdp.num_states(); ++s) {
        lo(static_cast<Eigen::Index>(g.visitation_coord(s))) = std::max(0.0, min_visit);
        hi(static_cast<Eigen::Index>(g.visitation_coord(s))) = std::min(top, max_visit);
    }
    return TargetSet::box(std::move(lo), std::move(hi));
}

}  // namespace appropo

#pragma once

#include "appropo/convex.hpp"
#include "appropo/mdp.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace appropo {

struct RandomMdpSpec {
    std::size_t states = 10;
    std::size_t actions = 3;
    std::size_t dim = 3;
    double gamma = 0.9;
    /// Adds a symmetric two-point measurement distribution around each mean.
    bool noise = false;

    bool operator==(const RandomMdpSpec&) const = default;
};

inline constexpr std::size_t kMaxStates = 2000;
inline constexpr std::size_t kMaxActions = 64;
inline constexpr std::size_t kMaxDim = 128;

/// Random transitions, initial distribution and means in [-1, 1]^d.
VectorMDP random_mdp(std::uint64_t seed, const RandomMdpSpec& spec);

using Cell = std::pair<std::size_t, std::size_t>;  // (x, y)

struct GridworldSpec {
    std::size_t width = 3;
    std::size_t height = 3;
    double gamma = 0.9;
    /// Probability that a move goes in a uniformly random other direction.
    double slip = 0.0;
    Cell start{0, 0};
    Cell goal{2, 0};
    std::vector<Cell> unsafe{{1, 0}, {1, 1}};

    bool operator==(const GridworldSpec&) const = default;
};

/**
 * Grid with actions up, right, down, left. The goal is absorbing. The
 * measurement on each step is (goal indicator, unsafe indicator, one-hot
 * visitation of the current cell), so d = 2 + width * height.
 */
struct Gridworld {
    GridworldSpec spec;
    VectorMDP mdp;

    std::size_t state(Cell c) const { return c.second * spec.width + c.first; }
    static constexpr std::size_t reward_coord = 0;
    static constexpr std::size_t unsafe_coord = 1;
    std::size_t visitation_coord(std::size_t s) const { return 2 + s; }
};

Gridworld gridworld(const GridworldSpec& spec);

/// Every coordinate in [0, 1/(1-gamma)], the range reachable by indicators.
TargetSet indicator_box(std::size_t dim, double gamma);

/// Indicator box with the long-term unsafe value capped at `max_unsafe`.
TargetSet safety_preset(const Gridworld& g, double max_unsafe);

/// Indicator box with each cell's long-term visitation kept in [min_visit, max_visit].
TargetSet visitation_box_preset(const Gridworld& g, double min_visit, double max_visit);

}  // namespace appropo

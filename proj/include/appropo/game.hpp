#pragma once

#include "appropo/common.hpp"
#include "appropo/learner.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace appropo {

/// g(lambda, u) = lambda' M u + a' lambda + b' u + c.
struct BilinearPayoff {
    Mat m;
    Vec a;
    Vec b;
    double c = 0.0;

    double operator()(const Vec& lambda, const Vec& u) const { return lambda.dot(m * u) + a.dot(lambda) + b.dot(u) + c; }
};

/**
 * Zero-sum game: the lambda-player maximizes g, the u-player minimizes it.
 * The payoff is given as a callable and must be bilinear (plus affine terms);
 * solve_game recovers its coefficients by probing and checks them on random
 * points.
 */
struct GameConfig {
    std::function<double(const Vec& lambda, const Vec& u)> payoff;
    std::shared_ptr<const Domain> lambda_set;
    std::shared_ptr<const Domain> u_set;
    std::size_t rounds = 1000;
    /// Defaults to D / (G sqrt(T)).
    std::optional<double> eta;
    std::size_t bilinearity_probes = 16;
    std::uint64_t seed = 0;
};

struct GameCertificate {
    double regret = 0.0;
    double gradient_bound = 0.0;
    /// D G sqrt(T) for the step size used.
    double regret_bound = 0.0;
    /// min over u of g(lambda_bar, u).
    double lower_value = 0.0;
    /// max over lambda of g(lambda, u_bar).
    double upper_value = 0.0;
    /// Exact game value; absent when the set kinds are not supported.
    std::optional<double> value;
    bool certified() const { return value.has_value(); }
};

struct GameResult {
    Vec lambda_bar;
    Vec u_bar;
    BilinearPayoff payoff;
    GameCertificate certificate;
    OgdState learner;
    /// u_t for each round.
    std::vector<Vec> responses;
};

/// Recovers M, a, b, c from a callable and checks additivity on random points.
BilinearPayoff extract_bilinear(const std::function<double(const Vec&, const Vec&)>& payoff, const Domain& lambda_set,
                                const Domain& u_set, std::size_t probes, std::uint64_t seed);

/// max over lambda of min over u of g, by linear programming. Box and simplex domains only.
std::optional<double> game_value(const BilinearPayoff& g, const Domain& lambda_set, const Domain& u_set);

/// Repeated play: OGD for lambda against exact best responses for u.
GameResult solve_game(const GameConfig& cfg);

}  // namespace appropo

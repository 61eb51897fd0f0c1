#pragma once

#include "appropo/common.hpp"
#include "appropo/convex.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace appropo {

/**
 * Convex decision set for an online learner: exposes Euclidean projection and
 * exact minimization of linear functions (the best fixed decision in
 * hindsight for linear losses).
 */
class Domain {
public:
    virtual ~Domain() = default;
    virtual std::size_t dim() const = 0;
    virtual Vec project(const Vec& x) const = 0;
    /// min over the domain of g . x.
    virtual double min_linear(const Vec& g) const = 0;
    /// A minimizer of g . x over the domain.
    virtual Vec argmin_linear(const Vec& g) const = 0;
    /// Euclidean diameter (or an upper bound on it).
    virtual double diameter() const = 0;
    /// Largest norm of a point in the domain.
    virtual double max_norm() const = 0;
    virtual bool contains(const Vec& x, double tol = 1e-9) const = 0;
};

/// Lambda = polar(C) intersected with the unit ball.
class ConeLambdaDomain final : public Domain {
public:
    explicit ConeLambdaDomain(TargetSet cone) : set_(std::move(cone)) {}
    std::size_t dim() const override { return set_.dim(); }
    Vec project(const Vec& x) const override { return set_.project(x); }
    double min_linear(const Vec& g) const override { return set_.min_linear(g); }
    Vec argmin_linear(const Vec& g) const override { return lambda_maximizer(set_.cone(), -g); }
    double diameter() const override { return 1.0; }
    double max_norm() const override { return 1.0; }
    bool contains(const Vec& x, double tol) const override { return set_.contains(x, tol); }
    const LambdaSet& lambda_set() const { return set_; }

private:
    LambdaSet set_;
};

/// Axis-aligned box with finite bounds.
class BoxDomain final : public Domain {
public:
    BoxDomain(Vec lo, Vec hi);
    std::size_t dim() const override { return static_cast<std::size_t>(lo_.size()); }
    Vec project(const Vec& x) const override { return x.cwiseMax(lo_).cwiseMin(hi_); }
    double min_linear(const Vec& g) const override { return g.dot(argmin_linear(g)); }
    /// Lower bound wherever g_i >= 0 (ties resolve to lo).
    Vec argmin_linear(const Vec& g) const override;
    double diameter() const override { return (hi_ - lo_).norm(); }
    double max_norm() const override { return lo_.cwiseAbs().cwiseMax(hi_.cwiseAbs()).norm(); }
    bool contains(const Vec& x, double tol) const override;
    const Vec& lo() const { return lo_; }
    const Vec& hi() const { return hi_; }

private:
    Vec lo_, hi_;
};

/// Probability simplex {x >= 0, sum x = 1}.
class SimplexDomain final : public Domain {
public:
    explicit SimplexDomain(std::size_t dim);
    std::size_t dim() const override { return dim_; }
    Vec project(const Vec& x) const override;
    double min_linear(const Vec& g) const override { return g.minCoeff(); }
    /// Vertex at the smallest coordinate of g (lowest index on ties).
    Vec argmin_linear(const Vec& g) const override;
    double diameter() const override { return dim_ > 1 ? std::sqrt(2.0) : 0.0; }
    double max_norm() const override { return 1.0; }
    bool contains(const Vec& x, double tol) const override;

private:
    std::size_t dim_;
};

/**
 * Online gradient descent state for linear losses l_t(lambda) = g_t . lambda.
 * Stores the loss gradients so the best fixed decision in hindsight can be
 * computed exactly.
 */
struct OgdState {
    Vec current;
    double eta = 0.0;
    std::size_t t = 0;
    double cumulative_loss = 0.0;
    std::vector<Vec> loss_history;
    std::vector<Vec> iterates;  // lambda_1 .. lambda_t, as played

    OgdState(Vec initial, double eta);
};

/// Plays `state.current` against the loss with gradient `g`, then steps.
void ogd_step(OgdState& state, const Vec& loss_gradient, const Domain& domain);

/// Value-returning form of ogd_step.
OgdState ogd_stepped(OgdState state, const Vec& loss_gradient, const Domain& domain);

/// sum_t l_t(lambda_t) - min over the domain of sum_t l_t(lambda).
double realized_regret(const OgdState& state, const Domain& domain);

/// Mean of the played iterates.
Vec average_iterate(const OgdState& state);

/// Constant step size D / (G sqrt(T)).
double ogd_step_size(double diameter, double gradient_bound, std::size_t rounds);

}  // namespace appropo

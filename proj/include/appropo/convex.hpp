#pragma once

#include "appropo/common.hpp"

#include <memory>
#include <string>
#include <variant>

namespace appropo {

enum class SetKind { box, ball, polytope, generated_cone, lifted_cone };

std::string to_string(SetKind kind);

struct LiftedCone;

/**
 * Closed convex target set with an exact (or tolerance-certified) Euclidean
 * projection. Supported kinds:
 *
 *  - box: lo <= x <= hi, bounds may be infinite; a cone when every finite
 *    bound is zero (e.g. the nonpositive orthant or the whole space);
 *  - ball: ||x - center|| <= radius;
 *  - polytope: {x : A x <= b} intersected with optional box bounds, projected
 *    as a least-distance problem via NNLS; a cone when b = 0 and there are no finite
 *    bounds;
 *  - generated cone: {G w : w >= 0}, projected by nonnegative least squares;
 *  - lifted cone: cone(C x {kappa}) for a compact base C.
 *
 * Sets are immutable; copies share the lifted base.
 */
class TargetSet {
public:
    static TargetSet box(Vec lo, Vec hi);
    static TargetSet ball(Vec center, double radius);
    static TargetSet polytope(Mat a, Vec b);
    static TargetSet polytope(Mat a, Vec b, Vec lo, Vec hi);
    /// Conic hull of the columns of `generators`.
    static TargetSet cone(Mat generators);
    /// {x : A x <= 0}.
    static TargetSet polyhedral_cone(Mat a);
    static TargetSet nonpositive_orthant(std::size_t dim);
    static TargetSet whole_space(std::size_t dim);
    static TargetSet lifted(const LiftedCone& lifted);

    SetKind kind() const;
    std::size_t dim() const { return dim_; }
    bool is_cone() const { return is_cone_; }
    bool is_compact() const { return is_compact_; }

    /// Euclidean projection.
    Vec project(const Vec& x) const;
    double distance(const Vec& x) const { return (x - project(x)).norm(); }
    bool contains(const Vec& x, double tol = 1e-9) const;

    /// max over the set of direction . y; +inf when unbounded in that direction.
    double support(const Vec& direction) const;

    /// Largest norm of a point in the set (compact sets only).
    double max_norm() const;

    /// Some point of the set; used by property checks.
    Vec sample(Rng& rng) const;

    /// Intersection with {x : a . x <= b}; box and polytope sets only.
    TargetSet with_halfspace(const Vec& a, double b) const;

    // Kind-specific parameters.
    struct Box {
        Vec lo, hi;
    };
    struct Ball {
        Vec center;
        double radius;
    };
    struct Polytope {
        Mat a;
        Vec b;
        Vec lo, hi;  // +-inf where unbounded
    };
    struct GeneratedCone {
        Mat generators;  // one generator per column
    };
    struct Lifted {
        std::shared_ptr<const TargetSet> base;
        double kappa;
    };
    using Data = std::variant<Box, Ball, Polytope, GeneratedCone, Lifted>;
    const Data& data() const { return data_; }

private:
    TargetSet(Data data, std::size_t dim, bool is_cone, bool is_compact)
        : data_(std::move(data)), dim_(dim), is_cone_(is_cone), is_compact_(is_compact) {}

    Data data_;
    std::size_t dim_;
    bool is_cone_;
    bool is_compact_;
};

/// C-tilde = cone(base x {kappa}) together with the parameters that built it.
struct LiftedCone {
    std::shared_ptr<const TargetSet> base;
    double kappa = 0.0;
    double delta = 0.0;
    double base_max_norm = 0.0;

    std::size_t dim() const { return base->dim() + 1; }
    TargetSet as_set() const { return TargetSet::lifted(*this); }
    /// x (+) kappa.
    Vec lift_point(const Vec& x) const;
};

Vec project(const TargetSet& set, const Vec& x);

/// Projection onto the polar cone: x - project(cone, x).
Vec project_polar(const TargetSet& cone, const Vec& x);

/// Projection onto Lambda = polar(C) intersected with the unit ball.
Vec project_lambda(const TargetSet& cone, const Vec& x);

double distance(const TargetSet& set, const Vec& x);

/// Maximizer of lambda . x over Lambda; attains distance(cone, x).
Vec lambda_maximizer(const TargetSet& cone, const Vec& x);

/// Lifts a compact base with kappa = max_norm(base) / sqrt(2 delta).
LiftedCone lift(const TargetSet& base, double delta);

/// Same construction with an explicit kappa; delta is reported as max_norm^2 / (2 kappa^2).
LiftedCone lift_with_kappa(const TargetSet& base, double kappa);

/// max_{x in C} ||x||: closed form for boxes and balls, vertex enumeration for polytopes.
double measurement_bound_norm(const TargetSet& set);

/**
 * Lambda = polar(C) intersected with the unit ball, for a cone C. This is the
 * decision set of the lambda-player.
 */
class LambdaSet {
public:
    explicit LambdaSet(TargetSet cone);

    const TargetSet& cone() const { return cone_; }
    std::size_t dim() const { return cone_.dim(); }
    Vec project(const Vec& x) const { return project_lambda(cone_, x); }
    /// ||lambda|| <= 1 + tol and lambda . c <= tol ||c|| for every c in C.
    bool contains(const Vec& lambda, double tol = 1e-9) const;
    /// Violation of the polar condition, normalized per unit-norm point of C.
    double polar_violation(const Vec& lambda) const;
    /// min over Lambda of g . lambda, i.e. -distance(C, -g).
    double min_linear(const Vec& g) const { return -distance(cone_, -g); }

private:
    TargetSet cone_;
};

}  // namespace appropo

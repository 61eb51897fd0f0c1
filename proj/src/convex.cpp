#include "appropo/convex.hpp"

#include "appropo/linprog.hpp"
#include "appropo/nnls.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace appropo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDykstraTol = 1e-10;
constexpr int kDykstraMaxSweeps = 10000;
constexpr int kScanPoints = 64;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_dim(const TargetSet& set, const Vec& x, const char* where) {
    if (static_cast<std::size_t>(x.size()) != set.dim())
        throw DimensionError(std::string(where) + ": point has dimension " + std::to_string(x.size()) +
                             ", set has dimension " + std::to_string(set.dim()));
}

bool has_finite_bound(const Vec& lo, const Vec& hi) {
    return lo.array().isFinite().any() || hi.array().isFinite().any();
}

// ---- polytope helpers --------------------------------------------------------

// maximize c . x over the polytope, with x split into positive and negative parts
LpResult polytope_lp(const TargetSet::Polytope& p, const Vec& c) {
    const Eigen::Index d = c.size();
    std::vector<Eigen::RowVectorXd> rows;
    std::vector<double> rhs;
    for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
        Eigen::RowVectorXd r(2 * d);
        r << p.a.row(i), -p.a.row(i);
        rows.push_back(r);
        rhs.push_back(p.b(i));
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        if (std::isfinite(p.hi(j))) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(2 * d);
            r(j) = 1.0;
            r(d + j) = -1.0;
            rows.push_back(r);
            rhs.push_back(p.hi(j));
        }
        if (std::isfinite(p.lo(j))) {
            Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(2 * d);
            r(j) = -1.0;
            r(d + j) = 1.0;
            rows.push_back(r);
            rhs.push_back(-p.lo(j));
        }
    }
    LinearProgram lp;
    lp.c.resize(2 * d);
    lp.c << c, -c;
    lp.a_ub.resize(static_cast<Eigen::Index>(rows.size()), 2 * d);
    lp.b_ub.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        lp.a_ub.row(static_cast<Eigen::Index>(i)) = rows[i];
        lp.b_ub(static_cast<Eigen::Index>(i)) = rhs[i];
    }
    LpResult res = solve_lp(lp);
    if (res.status == LpStatus::optimal) res.x = (res.x.head(d) - res.x.tail(d)).eval();
    return res;
}

double polytope_residual(const TargetSet::Polytope& p, const Vec& x) {
    double r = 0.0;
    if (p.a.rows() > 0) r = std::max(r, (p.a * x - p.b).maxCoeff());
    r = std::max(r, (p.lo - x).maxCoeff());
    r = std::max(r, (x - p.hi).maxCoeff());
    return r;
}

Vec dykstra(const TargetSet::Polytope& p, const Vec& x0) {
    if (polytope_residual(p, x0) <= 0.0) return x0;
    const bool has_box = has_finite_bound(p.lo, p.hi);
    const Eigen::Index k = p.a.rows();
    const std::size_t n_sets = static_cast<std::size_t>(k) + (has_box ? 1 : 0);
    std::vector<Vec> increments(n_sets, Vec::Zero(x0.size()));
    Vec norms2 = p.a.rowwise().squaredNorm();
    Vec x = x0;
    for (int sweep = 0; sweep < kDykstraMaxSweeps; ++sweep) {
        const Vec start = x;
        double inc_change = 0.0;
        std::size_t idx = 0;
        if (has_box) {
            Vec y = x + increments[idx];
            x = y.cwiseMax(p.lo).cwiseMin(p.hi);
            Vec inc = y - x;
            inc_change += (inc - increments[idx]).squaredNorm();
            increments[idx++] = std::move(inc);
        }
        for (Eigen::Index i = 0; i < k; ++i, ++idx) {
            Vec y = x + increments[idx];
            if (norms2(i) > 0.0) {
                const double viol = p.a.row(i).dot(y) - p.b(i);
                x = viol > 0.0 ? Vec(y - (viol / norms2(i)) * p.a.row(i).transpose()) : y;
            } else {
                x = y;
            }
            Vec inc = y - x;
            inc_change += (inc - increments[idx]).squaredNorm();
            increments[idx] = std::move(inc);
        }
        const double scale = std::max(1.0, x.norm());
        if ((x - start).norm() <= kDykstraTol * scale && std::sqrt(inc_change) <= kDykstraTol * scale &&
            polytope_residual(p, x) <= 1e-10 * scale)
            break;
    }
    return x;
}

// Exact projection as a least-distance problem min ||u|| s.t. M (x + u) <= c,
// reduced to one NNLS solve (Lawson and Hanson). Falls back to Dykstra when the
// reduction degenerates.
Vec project_polytope(const TargetSet::Polytope& p, const Vec& x) {
    if (polytope_residual(p, x) <= 0.0) return x;
    const Eigen::Index d = x.size();
    std::vector<std::pair<Vec, double>> rows;
    for (Eigen::Index i = 0; i < p.a.rows(); ++i) {
        const double n = p.a.row(i).norm();
        if (n > 0.0) rows.emplace_back(p.a.row(i).transpose() / n, p.b(i) / n);
    }
    for (Eigen::Index j = 0; j < d; ++j) {
        if (std::isfinite(p.hi(j))) rows.emplace_back(Vec::Unit(d, j), p.hi(j));
        if (std::isfinite(p.lo(j))) rows.emplace_back(-Vec::Unit(d, j), -p.lo(j));
    }
    const auto m = static_cast<Eigen::Index>(rows.size());
    Mat e(d + 1, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& [row, rhs] = rows[static_cast<std::size_t>(k)];
        e.col(k).head(d) = -row;
        e(d, k) = row.dot(x) - rhs;
    }
    Vec f = Vec::Zero(d + 1);
    f(d) = 1.0;
    const Vec r = e * nnls(e, f) - f;
    if (!(std::abs(r(d)) > 1e-12)) return dykstra(p, x);
    const Vec y = x - r.head(d) / r(d);
    return y.cwiseMax(p.lo).cwiseMin(p.hi);
}

// Enumerates polytope vertices: each vertex has `j` tight general rows and
// d - j coordinates at a finite box bound.
template <class Visit>
void for_each_vertex(const TargetSet::Polytope& p, Visit&& visit) {
    const Eigen::Index d = p.lo.size();
    const Eigen::Index k = p.a.rows();
    const double scale = 1.0 + std::max(p.b.size() ? p.b.cwiseAbs().maxCoeff() : 0.0,
                                        std::max(p.lo.array().isFinite().select(p.lo.cwiseAbs(), 0.0).maxCoeff(),
                                                 p.hi.array().isFinite().select(p.hi.cwiseAbs(), 0.0).maxCoeff()));
    std::size_t work = 0;
    const std::size_t work_cap = 50'000'000;

    std::vector<Eigen::Index> rows_subset;
    std::vector<Eigen::Index> fixed_subset;
    // iterate subsets via index vectors
    auto next_combination = [](std::vector<Eigen::Index>& c, Eigen::Index n) {
        const auto r = static_cast<Eigen::Index>(c.size());
        for (Eigen::Index i = r - 1; i >= 0; --i) {
            if (c[static_cast<std::size_t>(i)] < n - r + i) {
                ++c[static_cast<std::size_t>(i)];
                for (Eigen::Index j = i + 1; j < r; ++j)
                    c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
                return true;
            }
        }
        return false;
    };

    for (Eigen::Index j = 0; j <= std::min(k, d); ++j) {
        rows_subset.resize(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < j; ++i) rows_subset[static_cast<std::size_t>(i)] = i;
        do {
            fixed_subset.resize(static_cast<std::size_t>(d - j));
            for (Eigen::Index i = 0; i < d - j; ++i) fixed_subset[static_cast<std::size_t>(i)] = i;
            do {
                bool bounds_ok = true;
                for (auto c : fixed_subset)
                    if (!std::isfinite(p.lo(c)) && !std::isfinite(p.hi(c))) bounds_ok = false;
                if (!bounds_ok) continue;
                std::vector<bool> is_fixed(static_cast<std::size_t>(d), false);
                for (auto c : fixed_subset) is_fixed[static_cast<std::size_t>(c)] = true;
                std::vector<Eigen::Index> free_coords;
                for (Eigen::Index c = 0; c < d; ++c)
                    if (!is_fixed[static_cast<std::size_t>(c)]) free_coords.push_back(c);
                const std::size_t n_fixed = fixed_subset.size();
                for (std::size_t mask = 0; mask < (std::size_t{1} << n_fixed); ++mask) {
                    if (++work > work_cap) throw Error("polytope vertex enumeration exceeds its work limit");
                    Vec x = Vec::Zero(d);
                    bool ok = true;
                    for (std::size_t f = 0; f < n_fixed; ++f) {
                        const auto c = fixed_subset[f];
                        const double v = (mask >> f & 1) ? p.hi(c) : p.lo(c);
                        if (!std::isfinite(v)) {
                            ok = false;
                            break;
                        }
                        x(c) = v;
                    }
                    if (!ok) continue;
                    if (j > 0) {
                        Mat m(j, j);
                        Vec rhs(j);
                        for (Eigen::Index r = 0; r < j; ++r) {
                            const auto row = rows_subset[static_cast<std::size_t>(r)];
                            rhs(r) = p.b(row) - p.a.row(row).dot(x);
                            for (Eigen::Index c = 0; c < j; ++c) m(r, c) = p.a(row, free_coords[static_cast<std::size_t>(c)]);
                        }
                        Eigen::FullPivLU<Mat> lu(m);
                        lu.setThreshold(1e-12);
                        if (lu.rank() < j) continue;
                        const Vec sol = lu.solve(rhs);
                        for (Eigen::Index c = 0; c < j; ++c) x(free_coords[static_cast<std::size_t>(c)]) = sol(c);
                    }
                    if (polytope_residual(p, x) <= 1e-9 * scale) visit(x);
                }
            } while (next_combination(fixed_subset, d));
        } while (next_combination(rows_subset, k));
    }
}

// ---- lifted cone -------------------------------------------------------------

Vec project_lifted(const TargetSet::Lifted& lifted, const Vec& xt) {
    const auto& base = *lifted.base;
    const Eigen::Index d = static_cast<Eigen::Index>(base.dim());
    const Vec x = xt.head(d);
    const double t = xt(d);
    const double kappa = lifted.kappa;
    const double norm2 = xt.squaredNorm();
    if (norm2 == 0.0) return xt;
    if (t > 0.0 && base.contains(x * (kappa / t), 0.0)) return xt;

    auto objective = [&](double alpha) {
        if (alpha <= 0.0) return norm2;
        const Vec y = base.project(x / alpha);
        return (x - alpha * y).squaredNorm() + (t - alpha * kappa) * (t - alpha * kappa);
    };
    auto derivative = [&](double alpha) {
        const Vec y = base.project(x / alpha);
        return -2.0 * y.dot(x - alpha * y) - 2.0 * kappa * (t - alpha * kappa);
    };

    const double alpha_max = std::sqrt(norm2) / kappa + base.max_norm();
    std::array<double, kScanPoints> grid{};
    std::array<double, kScanPoints> values{};
    std::size_t best = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        grid[i] = alpha_max * static_cast<double>(i) / static_cast<double>(kScanPoints - 1);
        values[i] = objective(grid[i]);
        if (values[i] < values[best]) best = i;
    }
    const double slack = 1e-12 * (norm2 + 1.0);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const bool descending = i < best;
        if ((descending && values[i + 1] > values[i] + slack) || (!descending && values[i + 1] < values[i] - slack))
            throw Error("lifted-cone projection: objective is not unimodal on the scan grid (alpha = " +
                        format_double(grid[i]) + ")");
    }

    double lo = grid[best == 0 ? 0 : best - 1];
    double hi = grid[std::min<std::size_t>(best + 1, grid.size() - 1)];
    const double bracket_lo = lo;
    const double bracket_hi = hi;
    const double width_tol = 1e-10 * std::max(1.0, alpha_max);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - inv_phi * (hi - lo);
    double e = lo + inv_phi * (hi - lo);
    double fc = objective(c);
    double fe = objective(e);
    while (hi - lo > width_tol) {
        if (fc <= fe) {
            hi = e;
            e = c;
            fe = fc;
            c = hi - inv_phi * (hi - lo);
            fc = objective(c);
        } else {
            lo = c;
            c = e;
            fc = fe;
            e = lo + inv_phi * (hi - lo);
            fe = objective(e);
        }
    }
    double alpha = 0.5 * (lo + hi);

    // The objective is convex in alpha (a partial minimum of a perspective),
    // so the derivative sign is monotone across the whole bracket; bisecting
    // on it pins alpha down far more tightly than golden-section search.
    double blo = bracket_lo > 0.0 ? bracket_lo : 1e-12 * bracket_hi;
    double bhi = bracket_hi;
    if (blo > 0.0 && derivative(blo) < 0.0 && derivative(bhi) > 0.0) {
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (blo + bhi);
            if (mid <= blo || mid >= bhi) break;
            (derivative(mid) < 0.0 ? blo : bhi) = mid;
        }
        // objective values are flat to rounding here, so compare nothing and keep the root
        alpha = 0.5 * (blo + bhi);
    }
    if (objective(0.0) <= objective(alpha)) return Vec::Zero(xt.size());

    Vec p(xt.size());
    p.head(d) = alpha * base.project(x / alpha);
    p(d) = alpha * kappa;
    return p;
}

Vec sample_direction(Rng& rng, Eigen::Index d) {
    Vec v(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) = rng.normal();
    const double n = v.norm();
    return n > 0.0 ? Vec(v / n) : Vec::Unit(d, 0);
}

}  // namespace

std::string to_string(SetKind kind) {
    switch (kind) {
        case SetKind::box: return "box";
        case SetKind::ball: return "ball";
        case SetKind::polytope: return "polytope";
        case SetKind::generated_cone: return "cone";
        case SetKind::lifted_cone: return "lifted-cone";
    }
    return "unknown";
}

TargetSet TargetSet::box(Vec lo, Vec hi) {
    if (lo.size() == 0 || lo.size() != hi.size()) throw DimensionError("box: bounds must have the same positive dimension");
    if (lo.hasNaN() || hi.hasNaN() || (lo.array() > hi.array()).any())
        throw InvalidArgument("box: empty set (lo > hi in some coordinate)");
    if ((lo.array() == kInf).any() || (hi.array() == -kInf).any()) throw InvalidArgument("box: empty set");
    bool is_cone = true;
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        if ((std::isfinite(lo(i)) && lo(i) != 0.0) || (std::isfinite(hi(i)) && hi(i) != 0.0)) is_cone = false;
    const bool compact = lo.allFinite() && hi.allFinite();
    const auto d = static_cast<std::size_t>(lo.size());
    return TargetSet(Box{std::move(lo), std::move(hi)}, d, is_cone, compact);
}

TargetSet TargetSet::ball(Vec center, double radius) {
    if (center.size() == 0) throw DimensionError("ball: zero dimension");
    if (!center.allFinite() || !(radius >= 0.0) || !std::isfinite(radius))
        throw InvalidArgument("ball: center must be finite and radius nonnegative");
    const auto d = static_cast<std::size_t>(center.size());
    const bool cone = radius == 0.0 && center.isZero(0.0);
    return TargetSet(Ball{std::move(center), radius}, d, cone, true);
}

TargetSet TargetSet::polytope(Mat a, Vec b) {
    const Eigen::Index d = a.cols();
    return polytope(std::move(a), std::move(b), Vec::Constant(d, -kInf), Vec::Constant(d, kInf));
}

TargetSet TargetSet::polytope(Mat a, Vec b, Vec lo, Vec hi) {
    const Eigen::Index d = lo.size();
    if (d == 0 || hi.size() != d || (a.rows() > 0 && a.cols() != d) || b.size() != a.rows())
        throw DimensionError("polytope: inconsistent dimensions");
    if (a.rows() == 0) a.resize(0, d);
    if (!a.allFinite() || !b.allFinite()) throw InvalidArgument("polytope: constraints must be finite");
    if (lo.hasNaN() || hi.hasNaN() || (lo.array() > hi.array()).any()) throw InvalidArgument("polytope: empty box bounds");
    Polytope p{std::move(a), std::move(b), std::move(lo), std::move(hi)};
    if (polytope_lp(p, Vec::Zero(d)).status == LpStatus::infeasible)
        throw InvalidArgument("polytope: constraints define an empty set");
    bool compact = p.lo.allFinite() && p.hi.allFinite();
    if (!compact) {
        compact = true;
        for (Eigen::Index j = 0; j < d && compact; ++j) {
            for (double sign : {1.0, -1.0}) {
                if (polytope_lp(p, sign * Vec::Unit(d, j)).status == LpStatus::unbounded) {
                    compact = false;
                    break;
                }
            }
        }
    }
    const bool cone = !has_finite_bound(p.lo, p.hi) && p.b.isZero(0.0);
    return TargetSet(std::move(p), static_cast<std::size_t>(d), cone, compact);
}

TargetSet TargetSet::cone(Mat generators) {
    if (generators.rows() == 0 || generators.cols() == 0) throw DimensionError("cone: need at least one generator");
    if (!generators.allFinite()) throw InvalidArgument("cone: generators must be finite");
    const auto d = static_cast<std::size_t>(generators.rows());
    return TargetSet(GeneratedCone{std::move(generators)}, d, true, false);
}

TargetSet TargetSet::polyhedral_cone(Mat a) {
    const Eigen::Index rows = a.rows();
    return polytope(std::move(a), Vec::Zero(rows));
}

TargetSet TargetSet::nonpositive_orthant(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return box(Vec::Constant(d, -kInf), Vec::Zero(d));
}

TargetSet TargetSet::whole_space(std::size_t dim) {
    const auto d = static_cast<Eigen::Index>(dim);
    return box(Vec::Constant(d, -kInf), Vec::Constant(d, kInf));
}

TargetSet TargetSet::lifted(const LiftedCone& lifted) {
    if (!lifted.base || !lifted.base->is_compact()) throw InvalidArgument("lifted cone: base must be compact");
    if (!(lifted.kappa > 0.0) || !std::isfinite(lifted.kappa)) throw InvalidArgument("lifted cone: kappa must be positive");
    return TargetSet(Lifted{lifted.base, lifted.kappa}, lifted.base->dim() + 1, true, false);
}

SetKind TargetSet::kind() const {
    return std::visit(Overloaded{[](const Box&) { return SetKind::box; }, [](const Ball&) { return SetKind::ball; },
                                 [](const Polytope&) { return SetKind::polytope; },
                                 [](const GeneratedCone&) { return SetKind::generated_cone; },
                                 [](const Lifted&) { return SetKind::lifted_cone; }},
                      data_);
}

Vec TargetSet::project(const Vec& x) const {
    check_dim(*this, x, "project");
    return std::visit(Overloaded{[&](const Box& b) -> Vec { return x.cwiseMax(b.lo).cwiseMin(b.hi); },
                                 [&](const Ball& b) -> Vec {
                                     const Vec off = x - b.center;
                                     const double n = off.norm();
                                     if (n <= b.radius) return x;
                                     return b.center + (b.radius / n) * off;
                                 },
                                 [&](const Polytope& p) -> Vec { return project_polytope(p, x); },
                                 [&](const GeneratedCone& g) -> Vec { return g.generators * nnls(g.generators, x); },
                                 [&](const Lifted& l) -> Vec { return project_lifted(l, x); }},
                      data_);
}

bool TargetSet::contains(const Vec& x, double tol) const {
    check_dim(*this, x, "contains");
    return std::visit(Overloaded{[&](const Box& b) {
                                     return ((b.lo.array() - tol) <= x.array()).all() &&
                                            (x.array() <= (b.hi.array() + tol)).all();
                                 },
                                 [&](const Ball& b) { return (x - b.center).norm() <= b.radius + tol; },
                                 [&](const Polytope& p) { return polytope_residual(p, x) <= tol; },
                                 [&](const GeneratedCone&) { return distance(x) <= tol; },
                                 [&](const Lifted&) { return distance(x) <= tol; }},
                      data_);
}

double TargetSet::support(const Vec& direction) const {
    check_dim(*this, direction, "support");
    return std::visit(
        Overloaded{[&](const Box& b) {
                       double s = 0.0;
                       for (Eigen::Index i = 0; i < direction.size(); ++i) {
                           if (direction(i) > 0.0) s += direction(i) * b.hi(i);
                           else if (direction(i) < 0.0) s += direction(i) * b.lo(i);
                       }
                       return s;
                   },
                   [&](const Ball& b) { return b.center.dot(direction) + b.radius * direction.norm(); },
                   [&](const Polytope& p) {
                       const LpResult r = polytope_lp(p, direction);
                       return r.status == LpStatus::unbounded ? kInf : r.objective;
                   },
                   [&](const GeneratedCone& g) {
                       return (g.generators.transpose() * direction).maxCoeff() > 0.0 ? kInf : 0.0;
                   },
                   [&](const Lifted& l) {
                       const Eigen::Index d = static_cast<Eigen::Index>(l.base->dim());
                       return l.base->support(direction.head(d)) + l.kappa * direction(d) > 0.0 ? kInf : 0.0;
                   }},
        data_);
}

double TargetSet::max_norm() const {
    if (!is_compact_) throw InvalidArgument("max_norm: set is not compact");
    return std::visit(Overloaded{[](const Box& b) { return b.lo.cwiseAbs().cwiseMax(b.hi.cwiseAbs()).norm(); },
                                 [](const Ball& b) { return b.center.norm() + b.radius; },
                                 [](const Polytope& p) {
                                     double best = 0.0;
                                     for_each_vertex(p, [&](const Vec& v) { best = std::max(best, v.norm()); });
                                     return best;
                                 },
                                 [](const GeneratedCone&) -> double { throw InvalidArgument("max_norm: cone"); },
                                 [](const Lifted&) -> double { throw InvalidArgument("max_norm: cone"); }},
                      data_);
}

Vec TargetSet::sample(Rng& rng) const {
    const auto d = static_cast<Eigen::Index>(dim_);
    return std::visit(
        Overloaded{[&](const Box& b) {
                       Vec x(d);
                       for (Eigen::Index i = 0; i < d; ++i) {
                           const double lo = std::isfinite(b.lo(i)) ? b.lo(i) : (std::isfinite(b.hi(i)) ? b.hi(i) - 5.0 : -5.0);
                           const double hi = std::isfinite(b.hi(i)) ? b.hi(i) : lo + 10.0;
                           x(i) = rng.uniform(lo, hi);
                       }
                       return x;
                   },
                   [&](const Ball& b) {
                       const double r = b.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
                       return Vec(b.center + r * sample_direction(rng, d));
                   },
                   [&](const Polytope&) {
                       const double scale = 5.0;
                       Vec p1 = project(scale * sample_direction(rng, d) * rng.uniform(0.0, 2.0));
                       Vec p2 = project(scale * sample_direction(rng, d) * rng.uniform(0.0, 2.0));
                       const double w = rng.uniform();
                       return Vec(w * p1 + (1.0 - w) * p2);
                   },
                   [&](const GeneratedCone& g) {
                       Vec w(g.generators.cols());
                       for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 3.0);
                       return Vec(g.generators * w);
                   },
                   [&](const Lifted& l) {
                       Vec x(d);
                       x.head(d - 1) = l.base->sample(rng);
                       x(d - 1) = l.kappa;
                       return Vec(rng.uniform(0.0, 3.0) * x);
                   }},
        data_);
}

TargetSet TargetSet::with_halfspace(const Vec& a, double b) const {
    check_dim(*this, a, "with_halfspace");
    if (const auto* box = std::get_if<Box>(&data_)) {
        Mat rows = a.transpose();
        return polytope(std::move(rows), Vec::Constant(1, b), box->lo, box->hi);
    }
    if (const auto* p = std::get_if<Polytope>(&data_)) {
        Mat rows(p->a.rows() + 1, p->a.cols());
        rows << p->a, a.transpose();
        Vec rhs(p->b.size() + 1);
        rhs << p->b, b;
        return polytope(std::move(rows), std::move(rhs), p->lo, p->hi);
    }
    throw InvalidArgument("with_halfspace: only box and polytope sets can be intersected");
}

Vec LiftedCone::lift_point(const Vec& x) const {
    if (static_cast<std::size_t>(x.size()) != base->dim()) throw DimensionError("lift_point: wrong dimension");
    Vec out(x.size() + 1);
    out << x, kappa;
    return out;
}

Vec project(const TargetSet& set, const Vec& x) { return set.project(x); }

Vec project_polar(const TargetSet& cone, const Vec& x) {
    if (!cone.is_cone()) throw InvalidArgument("project_polar: set is not a cone");
    return x - cone.project(x);
}

Vec project_lambda(const TargetSet& cone, const Vec& x) {
    const Vec polar = project_polar(cone, x);
    return polar / std::max(1.0, polar.norm());
}

double distance(const TargetSet& set, const Vec& x) { return set.distance(x); }

Vec lambda_maximizer(const TargetSet& cone, const Vec& x) {
    const Vec polar = project_polar(cone, x);
    const double n = polar.norm();
    // x in C up to rounding: normalizing the residual would amplify noise
    if (n <= 1e-12 * std::max(1.0, x.norm())) return Vec::Zero(x.size());
    return polar / n;
}

LiftedCone lift(const TargetSet& base, double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) throw InvalidArgument("lift: delta must be positive");
    if (!base.is_compact()) throw InvalidArgument("lift: base set must be compact");
    const double m = base.max_norm();
    LiftedCone out;
    out.base = std::make_shared<const TargetSet>(base);
    out.base_max_norm = m;
    out.delta = delta;
    // C = {0}: every kappa gives the same distances
    out.kappa = m > 0.0 ? m / std::sqrt(2.0 * delta) : 1.0;
    return out;
}

LiftedCone lift_with_kappa(const TargetSet& base, double kappa) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw InvalidArgument("lift_with_kappa: kappa must be positive");
    if (!base.is_compact()) throw InvalidArgument("lift_with_kappa: base set must be compact");
    LiftedCone out;
    out.base = std::make_shared<const TargetSet>(base);
    out.base_max_norm = base.max_norm();
    out.kappa = kappa;
    out.delta = out.base_max_norm * out.base_max_norm / (2.0 * kappa * kappa);
    return out;
}

double measurement_bound_norm(const TargetSet& set) {
    if (set.is_cone() && !set.is_compact()) throw InvalidArgument("measurement_bound_norm: cones are unbounded");
    return set.max_norm();
}

LambdaSet::LambdaSet(TargetSet cone) : cone_(std::move(cone)) {
    if (!cone_.is_cone()) throw InvalidArgument("LambdaSet: target must be a cone");
}

double LambdaSet::polar_violation(const Vec& lambda) const {
    if (static_cast<std::size_t>(lambda.size()) != dim()) throw DimensionError("polar_violation: wrong dimension");
    return std::visit(
        Overloaded{[&](const TargetSet::Box& b) {
                       double v = 0.0;
                       for (Eigen::Index i = 0; i < lambda.size(); ++i) {
                           if (b.hi(i) == kInf) v = std::max(v, lambda(i));
                           if (b.lo(i) == -kInf) v = std::max(v, -lambda(i));
                       }
                       return v;
                   },
                   [&](const TargetSet::Ball&) { return 0.0; },
                   [&](const TargetSet::Polytope& p) {
                       // polar of {A x <= 0} is the cone generated by the rows of A
                       if (p.a.rows() == 0) return lambda.norm();
                       const Mat gens = p.a.transpose();
                       return (lambda - gens * nnls(gens, lambda)).norm();
                   },
                   [&](const TargetSet::GeneratedCone& g) {
                       double v = 0.0;
                       for (Eigen::Index j = 0; j < g.generators.cols(); ++j) {
                           const double n = g.generators.col(j).norm();
                           if (n > 0.0) v = std::max(v, lambda.dot(g.generators.col(j)) / n);
                       }
                       return v;
                   },
                   [&](const TargetSet::Lifted& l) {
                       const Eigen::Index d = static_cast<Eigen::Index>(l.base->dim());
                       return std::max(0.0, l.base->support(lambda.head(d)) + l.kappa * lambda(d)) / l.kappa;
                   }},
        cone_.data());
}

bool LambdaSet::contains(const Vec& lambda, double tol) const {
    return lambda.norm() <= 1.0 + tol && polar_violation(lambda) <= tol;
}

}  // namespace appropo

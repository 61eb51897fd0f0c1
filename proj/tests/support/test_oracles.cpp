#include "test_oracles.hpp"

#include "appropo/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace testing_oracle {

using appropo::LinearProgram;
using appropo::LpStatus;
using appropo::solve_lp;

Mat induced_transition(const VectorMDP& mdp, const Mat& probs) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const auto na = static_cast<Eigen::Index>(mdp.num_actions());
    Mat p = Mat::Zero(ns, ns);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) p.row(s) += probs(s, a) * mdp.transition().row(s * na + a);
    return p;
}

Mat induced_measurement(const VectorMDP& mdp, const Mat& probs) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const auto na = static_cast<Eigen::Index>(mdp.num_actions());
    Mat z = Mat::Zero(ns, static_cast<Eigen::Index>(mdp.dim()));
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) z.row(s) += probs(s, a) * mdp.measurement_mean().row(s * na + a);
    return z;
}

Vec evaluate(const VectorMDP& mdp, const Mat& probs) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const Mat a = Mat::Identity(ns, ns) - mdp.gamma() * induced_transition(mdp, probs);
    const Mat values = a.householderQr().solve(induced_measurement(mdp, probs));
    return values.transpose() * mdp.initial_dist();
}

Vec evaluate_deterministic(const VectorMDP& mdp, const std::vector<std::size_t>& actions) {
    Mat probs = Mat::Zero(static_cast<Eigen::Index>(mdp.num_states()), static_cast<Eigen::Index>(mdp.num_actions()));
    for (std::size_t s = 0; s < actions.size(); ++s) probs(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(actions[s])) = 1.0;
    return evaluate(mdp, probs);
}

void for_each_deterministic(std::size_t states, std::size_t actions,
                            const std::function<void(const std::vector<std::size_t>&)>& f) {
    std::vector<std::size_t> cur(states, 0);
    while (true) {
        f(cur);
        std::size_t i = 0;
        while (i < states && ++cur[i] == actions) cur[i++] = 0;
        if (i == states) return;
    }
}

MonteCarlo monte_carlo(const VectorMDP& mdp, const Mat& probs, std::size_t episodes, std::size_t horizon,
                       std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const auto ns = mdp.num_states();
    const auto na = mdp.num_actions();
    const auto d = static_cast<Eigen::Index>(mdp.dim());
    auto make = [](auto row, std::size_t n) {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = row(static_cast<Eigen::Index>(i));
        return std::discrete_distribution<std::size_t>(w.begin(), w.end());
    };
    auto start = make(mdp.initial_dist(), ns);
    std::vector<std::discrete_distribution<std::size_t>> act, next;
    for (std::size_t s = 0; s < ns; ++s) act.push_back(make(probs.row(static_cast<Eigen::Index>(s)), na));
    for (std::size_t r = 0; r < ns * na; ++r) next.push_back(make(mdp.transition().row(static_cast<Eigen::Index>(r)), ns));
    Vec sum = Vec::Zero(d), sum_sq = Vec::Zero(d);
    for (std::size_t e = 0; e < episodes; ++e) {
        std::size_t s = start(gen);
        Vec total = Vec::Zero(d);
        double disc = 1.0;
        for (std::size_t i = 0; i < horizon; ++i) {
            const std::size_t a = act[s](gen);
            const std::size_t row = s * na + a;
            Vec z = mdp.measurement_mean().row(static_cast<Eigen::Index>(row)).transpose();
            if (mdp.has_noise()) {
                const auto support = mdp.noise(s, a);
                std::vector<double> w;
                for (const auto& o : support) w.push_back(o.prob);
                std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
                z = support[pick(gen)].z;
            }
            total += disc * z;
            disc *= mdp.gamma();
            s = next[row](gen);
        }
        sum += total;
        sum_sq += total.cwiseProduct(total);
    }
    const double n = static_cast<double>(episodes);
    MonteCarlo out;
    out.mean = sum / n;
    const Vec var = ((sum_sq - n * out.mean.cwiseProduct(out.mean)) / (n - 1.0)).cwiseMax(0.0);
    out.std_error = (var / n).cwiseSqrt();
    return out;
}

namespace {

// Minimizes lambda . z over occupancy measures; returns the optimal point z(x).
Vec occupancy_lp_point(const VectorMDP& mdp, const Vec& lambda, double* value) {
    const auto ns = static_cast<Eigen::Index>(mdp.num_states());
    const auto na = static_cast<Eigen::Index>(mdp.num_actions());
    const Eigen::Index n = ns * na;
    LinearProgram lp;
    lp.c = -(mdp.measurement_mean() * lambda);
    lp.a_eq = Mat::Zero(ns, n);
    for (Eigen::Index s = 0; s < ns; ++s)
        for (Eigen::Index a = 0; a < na; ++a) {
            const Eigen::Index col = s * na + a;
            lp.a_eq(s, col) += 1.0;
            lp.a_eq.col(col) -= mdp.gamma() * mdp.transition().row(col).transpose();
        }
    lp.b_eq = mdp.initial_dist();
    lp.a_ub = Mat(0, n);
    lp.b_ub = Vec(0);
    const auto res = solve_lp(lp);
    if (res.status != LpStatus::optimal) throw std::runtime_error("occupancy LP did not solve");
    if (value) *value = -res.objective;
    return mdp.measurement_mean().transpose() * res.x;
}

Vec project_simplex(const Vec& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        css += u[i];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[i] - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0);
}

struct Master {
    Vec w;
    Vec c;  // point of C
};

// FISTA with restarts on 1/2 ||Z w - c||^2 over simplex x C, where C is
// either a box (c eliminated by clamping) or cone(G) (c = G theta, theta >= 0).
Master solve_master(const Mat& z, const Mat* g, const Vec* lo, const Vec* hi, Vec w0, std::size_t iters) {
    const Eigen::Index k = z.cols();
    const Eigen::Index m = g ? g->cols() : 0;
    Mat joint(z.rows(), k + m);
    joint.leftCols(k) = z;
    if (g) joint.rightCols(m) = -*g;
    const double lip = std::max(1e-12, joint.jacobiSvd().singularValues()(0) * joint.jacobiSvd().singularValues()(0));
    Vec x = Vec::Zero(k + m);
    x.head(k) = w0;
    auto project = [&](Vec v) {
        v.head(k) = project_simplex(v.head(k));
        if (m) v.tail(m) = v.tail(m).cwiseMax(0.0);
        return v;
    };
    auto residual = [&](const Vec& v) -> Vec {
        const Vec y = z * v.head(k);
        if (g) return y - *g * v.tail(m);
        return y - y.cwiseMax(*lo).cwiseMin(*hi);
    };
    auto objective = [&](const Vec& v) { return 0.5 * residual(v).squaredNorm(); };
    Vec yv = x;
    double tk = 1.0;
    double fx = objective(x);
    for (std::size_t it = 0; it < iters; ++it) {
        const Vec r = residual(yv);
        Vec grad(k + m);
        grad.head(k) = z.transpose() * r;
        if (m) grad.tail(m) = -g->transpose() * r;
        const Vec xn = project(yv - grad / lip);
        const double fn = objective(xn);
        if (fn > fx) {  // restart momentum
            yv = x;
            tk = 1.0;
            continue;
        }
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tk * tk));
        yv = xn + ((tk - 1.0) / tn) * (xn - x);
        x = xn;
        fx = fn;
        tk = tn;
    }
    Master out;
    out.w = x.head(k);
    const Vec y = z * out.w;
    out.c = g ? Vec(*g * x.tail(m)) : Vec(y.cwiseMax(*lo).cwiseMin(*hi));
    return out;
}

// Closest lambda (in max-norm) to lambda0 with G' lambda <= 0.
Vec polar_repair(const Mat& g, const Vec& lambda0) {
    const Eigen::Index d = lambda0.size();
    if ((g.transpose() * lambda0).maxCoeff() <= 0.0) return lambda0;
    // variables p (d), q (d), t; lambda = p - q
    LinearProgram lp;
    const Eigen::Index n = 2 * d + 1;
    lp.c = Vec::Zero(n);
    lp.c(2 * d) = -1.0;
    lp.a_ub = Mat::Zero(2 * d + g.cols(), n);
    lp.b_ub = Vec::Zero(2 * d + g.cols());
    for (Eigen::Index i = 0; i < d; ++i) {
        lp.a_ub(2 * i, i) = 1.0;
        lp.a_ub(2 * i, d + i) = -1.0;
        lp.a_ub(2 * i, 2 * d) = -1.0;
        lp.b_ub(2 * i) = lambda0(i);
        lp.a_ub(2 * i + 1, i) = -1.0;
        lp.a_ub(2 * i + 1, d + i) = 1.0;
        lp.a_ub(2 * i + 1, 2 * d) = -1.0;
        lp.b_ub(2 * i + 1) = -lambda0(i);
    }
    for (Eigen::Index j = 0; j < g.cols(); ++j) {
        lp.a_ub.block(2 * d + j, 0, 1, d) = g.col(j).transpose();
        lp.a_ub.block(2 * d + j, d, 1, d) = -g.col(j).transpose();
        // strict margin so simplex round-off cannot leave lambda outside the polar
        lp.b_ub(2 * d + j) = -1e-10 * g.col(j).norm();
    }
    lp.a_eq = Mat(0, n);
    lp.b_eq = Vec(0);
    const auto res = solve_lp(lp);
    if (res.status != LpStatus::optimal) return Vec::Zero(d);
    Vec lambda = res.x.head(d) - res.x.segment(d, d);
    // simplex round-off can leave a tiny violation; lambda = 0 is always valid
    if ((g.transpose() * lambda).maxCoeff() > 0.0) return Vec::Zero(d);
    return lambda;
}

MinDistance column_generation(const VectorMDP& mdp, const Mat* g, const Vec* lo, const Vec* hi, double gap) {
    const auto d = static_cast<Eigen::Index>(mdp.dim());
    std::vector<Vec> cols;
    for (Eigen::Index i = 0; i < d; ++i)
        for (double sgn : {1.0, -1.0}) {
            Vec e = Vec::Zero(d);
            e(i) = sgn;
            cols.push_back(occupancy_lp_point(mdp, e, nullptr));
        }
    MinDistance out;
    out.lower = 0.0;
    out.upper = std::numeric_limits<double>::infinity();
    Vec w;
    for (std::size_t round = 0; round < 300; ++round) {
        Mat z(d, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) z.col(static_cast<Eigen::Index>(j)) = cols[j];
        Vec w0 = Vec::Zero(z.cols());
        if (w.size()) w0.head(w.size()) = w;
        else w0.setConstant(1.0 / static_cast<double>(z.cols()));
        const Master mst = solve_master(z, g, lo, hi, w0, 4000);
        w = mst.w;
        const Vec y = z * w;
        const Vec r = y - mst.c;
        const double ub = r.norm();
        out.upper = std::min(out.upper, ub);
        if (ub <= 1e-14) {
            out.lower = 0.0;
            out.upper = ub;
            break;
        }
        const Vec lambda0 = r / ub;
        double lb;
        if (g) {
            const Vec lam = polar_repair(*g, lambda0);
            const Vec lam_unit = lam / std::max(1.0, lam.norm());
            double v = 0.0;
            occupancy_lp_point(mdp, lam_unit, &v);
            lb = v;
        } else {
            double v = 0.0;
            occupancy_lp_point(mdp, lambda0, &v);
            double support = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) support += std::max(lambda0(i) * (*lo)(i), lambda0(i) * (*hi)(i));
            lb = v - support;
        }
        out.lower = std::max(out.lower, lb);
        out.columns = cols.size();
        if (out.upper - out.lower <= gap) break;
        // price a new column for the current direction
        const Vec fresh = occupancy_lp_point(mdp, lambda0, nullptr);
        bool known = false;
        for (const auto& c : cols) known = known || (c - fresh).norm() <= 1e-12;
        if (!known) cols.push_back(fresh);
    }
    out.lower = std::max(0.0, std::min(out.lower, out.upper));
    return out;
}

}  // namespace

double occupancy_lp_min(const VectorMDP& mdp, const Vec& lambda) {
    double v = 0.0;
    occupancy_lp_point(mdp, lambda, &v);
    return v;
}

MinDistance min_distance_cone(const VectorMDP& mdp, const Mat& generators, double gap) {
    return column_generation(mdp, &generators, nullptr, nullptr, gap);
}

MinDistance min_distance_box(const VectorMDP& mdp, const Vec& lo, const Vec& hi, double gap) {
    return column_generation(mdp, nullptr, &lo, &hi, gap);
}

double constrained_max(const std::vector<std::pair<double, double>>& points, double c) {
    // Pareto front: lower u and higher r are both better
    std::vector<std::pair<double, double>> pts = points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.first < b.first || (a.first == b.first && a.second > b.second);
    });
    std::vector<std::pair<double, double>> front;
    double best_r = -std::numeric_limits<double>::infinity();
    for (const auto& p : pts)
        if (p.second > best_r) {
            front.push_back(p);
            best_r = p.second;
        }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : front)
        if (p.first <= c) best = std::max(best, p.second);
    for (const auto& l : front) {
        if (l.first > c) continue;
        for (const auto& r : front) {
            if (r.first <= c) continue;
            const double theta = (r.first - c) / (r.first - l.first);
            best = std::max(best, theta * l.second + (1.0 - theta) * r.second);
        }
    }
    return best;
}

}  // namespace testing_oracle

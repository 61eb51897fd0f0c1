#include "appropo/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace appropo {
namespace {

struct Tableau {
    Mat t;                       // m rows, ncols + 1 (last column is rhs)
    std::vector<Eigen::Index> basis;
    std::vector<bool> allowed;   // columns that may enter

    Eigen::Index rows() const { return t.rows(); }
    Eigen::Index cols() const { return t.cols() - 1; }

    void pivot(Eigen::Index r, Eigen::Index c) {
        t.row(r) /= t(r, c);
        for (Eigen::Index i = 0; i < t.rows(); ++i) {
            if (i == r) continue;
            const double f = t(i, c);
            if (f != 0.0) t.row(i) -= f * t.row(r);
        }
        basis[static_cast<std::size_t>(r)] = c;
    }

    // Maximizes cost'x over the current basis. Returns false if unbounded.
    bool optimize(const Vec& cost, double tol) {
        const auto n = cols();
        const std::size_t max_iter = 50000;
        for (std::size_t it = 0; it < max_iter; ++it) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < n; ++j) {
                if (!allowed[static_cast<std::size_t>(j)]) continue;
                double reduced = cost(j);
                for (Eigen::Index i = 0; i < rows(); ++i)
                    reduced -= cost(basis[static_cast<std::size_t>(i)]) * t(i, j);
                if (reduced > tol) {
                    enter = j;
                    break;
                }
            }
            if (enter < 0) return true;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < rows(); ++i) {
                const double a = t(i, enter);
                if (a > tol) best = std::min(best, t(i, n) / a);
            }
            if (!std::isfinite(best)) return false;
            Eigen::Index leave = -1;
            for (Eigen::Index i = 0; i < rows(); ++i) {
                const double a = t(i, enter);
                if (a <= tol || t(i, n) / a > best + tol) continue;
                if (leave < 0 || basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])
                    leave = i;
            }
            pivot(leave, enter);
        }
        throw Error("solve_lp: iteration limit reached");
    }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
    const Eigen::Index n = lp.c.size();
    const Eigen::Index m_ub = lp.a_ub.rows();
    const Eigen::Index m_eq = lp.a_eq.rows();
    if ((m_ub > 0 && (lp.a_ub.cols() != n || lp.b_ub.size() != m_ub)) ||
        (m_eq > 0 && (lp.a_eq.cols() != n || lp.b_eq.size() != m_eq)))
        throw DimensionError("solve_lp: constraint dimensions do not match objective");

    const Eigen::Index m = m_ub + m_eq;
    // columns: x (n) | slack/surplus (m_ub) | artificial (m)
    const Eigen::Index n_slack = m_ub;
    const Eigen::Index n_total = n + n_slack + m;
    Tableau tab;
    tab.t = Mat::Zero(m, n_total + 1);
    tab.basis.assign(static_cast<std::size_t>(m), 0);
    tab.allowed.assign(static_cast<std::size_t>(n_total), true);

    for (Eigen::Index i = 0; i < m; ++i) {
        const bool is_ub = i < m_ub;
        Eigen::RowVectorXd row = is_ub ? Eigen::RowVectorXd(lp.a_ub.row(i))
                                       : Eigen::RowVectorXd(lp.a_eq.row(i - m_ub));
        double rhs = is_ub ? lp.b_ub(i) : lp.b_eq(i - m_ub);
        const double sign = rhs < 0.0 ? -1.0 : 1.0;
        tab.t.row(i).head(n) = sign * row;
        if (is_ub) tab.t(i, n + i) = sign;
        tab.t(i, n_total) = sign * rhs;
        tab.t(i, n + n_slack + i) = 1.0;
        tab.basis[static_cast<std::size_t>(i)] = n + n_slack + i;
    }
    // a slack with coefficient +1 can start basic instead of the artificial
    for (Eigen::Index i = 0; i < m_ub; ++i) {
        if (tab.t(i, n + i) > 0.0) tab.basis[static_cast<std::size_t>(i)] = n + i;
    }

    Vec phase1 = Vec::Zero(n_total);
    phase1.tail(m).setConstant(-1.0);
    tab.optimize(phase1, tol);
    double infeas = 0.0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (tab.basis[static_cast<std::size_t>(i)] >= n + n_slack) infeas += tab.t(i, n_total);
    const double scale = 1.0 + (m > 0 ? tab.t.col(n_total).cwiseAbs().maxCoeff() : 0.0);
    LpResult result;
    if (infeas > 1e-8 * scale) {
        result.status = LpStatus::infeasible;
        return result;
    }
    // drive remaining artificials out of the basis
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
        if (tab.basis[static_cast<std::size_t>(i)] < n + n_slack) continue;
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < n + n_slack; ++j) {
            if (std::abs(tab.t(i, j)) > 1e-9) {
                col = j;
                break;
            }
        }
        if (col >= 0) tab.pivot(i, col);
        // otherwise the row is redundant; the artificial stays basic at zero
    }
    for (Eigen::Index j = n + n_slack; j < n_total; ++j) tab.allowed[static_cast<std::size_t>(j)] = false;

    Vec phase2 = Vec::Zero(n_total);
    phase2.head(n) = lp.c;
    if (!tab.optimize(phase2, tol)) {
        result.status = LpStatus::unbounded;
        return result;
    }
    result.status = LpStatus::optimal;
    result.x = Vec::Zero(n);
    for (Eigen::Index i = 0; i < tab.rows(); ++i) {
        const auto b = tab.basis[static_cast<std::size_t>(i)];
        if (b < n) result.x(b) = tab.t(i, n_total);
    }
    result.objective = lp.c.dot(result.x);
    return result;
}

}  // namespace appropo

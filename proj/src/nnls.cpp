#include "appropo/nnls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace appropo {
namespace {

// Least squares restricted to the passive columns; other entries are zero.
Vec solve_passive(const Mat& a, const Vec& b, const std::vector<bool>& passive) {
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < passive.size(); ++j)
        if (passive[j]) cols.push_back(static_cast<Eigen::Index>(j));
    Vec z = Vec::Zero(a.cols());
    if (cols.empty()) return z;
    Mat sub(a.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = a.col(cols[k]);
    const Vec zs = sub.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zs(static_cast<Eigen::Index>(k));
    return z;
}

}  // namespace

Vec nnls(const Mat& a, const Vec& b, int max_iterations) {
    if (a.rows() != b.size()) throw DimensionError("nnls: row count mismatch");
    const Eigen::Index n = a.cols();
    if (max_iterations <= 0) max_iterations = static_cast<int>(30 * std::max<Eigen::Index>(n, 1));
    std::vector<bool> passive(static_cast<std::size_t>(n), false);
    Vec x = Vec::Zero(n);
    const double tol = 10.0 * std::numeric_limits<double>::epsilon() * a.cwiseAbs().maxCoeff() *
                       static_cast<double>(std::max(a.rows(), n)) * std::max(1.0, b.norm());

    for (int outer = 0; outer < max_iterations; ++outer) {
        const Vec w = a.transpose() * (b - a * x);
        Eigen::Index best = -1;
        double best_w = tol;
        for (Eigen::Index j = 0; j < n; ++j)
            if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
                best_w = w(j);
                best = j;
            }
        if (best < 0) break;
        passive[static_cast<std::size_t>(best)] = true;

        for (int inner = 0; inner <= n; ++inner) {
            Vec z = solve_passive(a, b, passive);
            bool feasible = true;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) feasible = false;
            if (feasible) {
                x = z;
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) alpha = std::min(alpha, x(j) / (x(j) - z(j)));
            x += alpha * (z - x);
            for (Eigen::Index j = 0; j < n; ++j)
                if (passive[static_cast<std::size_t>(j)] && std::abs(x(j)) <= tol) {
                    passive[static_cast<std::size_t>(j)] = false;
                    x(j) = 0.0;
                }
        }
    }
    return x.cwiseMax(0.0);
}

}  // namespace appropo

#include "appropo/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace appropo {

BoxDomain::BoxDomain(Vec lo, Vec hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() == 0 || lo_.size() != hi_.size()) throw DimensionError("BoxDomain: bound dimensions differ");
    if (!lo_.allFinite() || !hi_.allFinite() || (lo_.array() > hi_.array()).any())
        throw InvalidArgument("BoxDomain: bounds must be finite with lo <= hi");
}

Vec BoxDomain::argmin_linear(const Vec& g) const {
    if (g.size() != lo_.size()) throw DimensionError("BoxDomain: gradient has wrong dimension");
    return (g.array() < 0.0).select(hi_, lo_);
}

bool BoxDomain::contains(const Vec& x, double tol) const {
    return x.size() == lo_.size() && ((lo_.array() - tol) <= x.array()).all() && (x.array() <= (hi_.array() + tol)).all();
}

SimplexDomain::SimplexDomain(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw InvalidArgument("SimplexDomain: zero dimension");
}

Vec SimplexDomain::project(const Vec& x) const {
    if (static_cast<std::size_t>(x.size()) != dim_) throw DimensionError("SimplexDomain: wrong dimension");
    std::vector<double> u(x.data(), x.data() + x.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        cumsum += u[i];
        const double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (u[i] - candidate > 0.0) theta = candidate;
    }
    return (x.array() - theta).cwiseMax(0.0);
}

Vec SimplexDomain::argmin_linear(const Vec& g) const {
    Eigen::Index best = 0;
    g.minCoeff(&best);
    return Vec::Unit(static_cast<Eigen::Index>(dim_), best);
}

bool SimplexDomain::contains(const Vec& x, double tol) const {
    return static_cast<std::size_t>(x.size()) == dim_ && x.minCoeff() >= -tol && std::abs(x.sum() - 1.0) <= tol;
}

OgdState::OgdState(Vec initial, double step) : current(std::move(initial)), eta(step) {
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidArgument("OgdState: step size must be positive");
}

void ogd_step(OgdState& state, const Vec& loss_gradient, const Domain& domain) {
    if (loss_gradient.size() != state.current.size() || static_cast<std::size_t>(loss_gradient.size()) != domain.dim())
        throw DimensionError("ogd_step: gradient dimension does not match the iterate");
    if (!loss_gradient.allFinite()) throw InvalidArgument("ogd_step: gradient has non-finite entries");
    state.cumulative_loss += loss_gradient.dot(state.current);
    state.loss_history.push_back(loss_gradient);
    state.iterates.push_back(state.current);
    state.current = domain.project(state.current - state.eta * loss_gradient);
    ++state.t;
}

OgdState ogd_stepped(OgdState state, const Vec& loss_gradient, const Domain& domain) {
    ogd_step(state, loss_gradient, domain);
    return state;
}

double realized_regret(const OgdState& state, const Domain& domain) {
    if (state.loss_history.empty()) throw InvalidArgument("realized_regret: no recorded losses");
    Vec total = Vec::Zero(state.loss_history.front().size());
    for (const auto& g : state.loss_history) total += g;
    return state.cumulative_loss - domain.min_linear(total);
}

Vec average_iterate(const OgdState& state) {
    if (state.iterates.empty()) throw InvalidArgument("average_iterate: no iterates played");
    Vec mean = Vec::Zero(state.iterates.front().size());
    for (const auto& x : state.iterates) mean += x;
    return mean / static_cast<double>(state.iterates.size());
}

double ogd_step_size(double diameter, double gradient_bound, std::size_t rounds) {
    if (!(diameter > 0.0) || !(gradient_bound > 0.0) || rounds == 0)
        throw InvalidArgument("ogd_step_size: D, G and T must be positive");
    return diameter / (gradient_bound * std::sqrt(static_cast<double>(rounds)));
}

}  // namespace appropo

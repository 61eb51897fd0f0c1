#include "appropo/game.hpp"

#include "appropo/linprog.hpp"

#include <cmath>

namespace appropo {
namespace {

Vec unit(Eigen::Index n, Eigen::Index i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    return e;
}

Vec random_point(const Domain& domain, Rng& rng) {
    Vec x(static_cast<Eigen::Index>(domain.dim()));
    const double r = std::max(1.0, domain.max_norm());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.uniform(-r, r);
    return domain.project(x);
}

// lambda = offset + y with y >= 0 and the rows returned here.
struct LambdaEncoding {
    Vec offset;
    Mat a_ub, a_eq;
    Vec b_ub, b_eq;
};

std::optional<LambdaEncoding> encode_lambda(const Domain& d) {
    const auto n = static_cast<Eigen::Index>(d.dim());
    LambdaEncoding e;
    if (const auto* box = dynamic_cast<const BoxDomain*>(&d)) {
        e.offset = box->lo();
        e.a_ub = Mat::Identity(n, n);
        e.b_ub = box->hi() - box->lo();
        e.a_eq = Mat(0, n);
        e.b_eq = Vec(0);
        return e;
    }
    if (dynamic_cast<const SimplexDomain*>(&d)) {
        e.offset = Vec::Zero(n);
        e.a_ub = Mat(0, n);
        e.b_ub = Vec(0);
        e.a_eq = Mat::Ones(1, n);
        e.b_eq = Vec::Ones(1);
        return e;
    }
    return std::nullopt;
}

}  // namespace

BilinearPayoff extract_bilinear(const std::function<double(const Vec&, const Vec&)>& payoff, const Domain& lambda_set,
                                const Domain& u_set, std::size_t probes, std::uint64_t seed) {
    if (!payoff) throw InvalidArgument("solve_game: payoff is not set");
    const auto n = static_cast<Eigen::Index>(lambda_set.dim());
    const auto k = static_cast<Eigen::Index>(u_set.dim());
    const Vec zl = Vec::Zero(n);
    const Vec zu = Vec::Zero(k);
    BilinearPayoff g;
    g.c = payoff(zl, zu);
    g.a.resize(n);
    g.b.resize(k);
    g.m.resize(n, k);
    for (Eigen::Index i = 0; i < n; ++i) g.a(i) = payoff(unit(n, i), zu) - g.c;
    for (Eigen::Index j = 0; j < k; ++j) g.b(j) = payoff(zl, unit(k, j)) - g.c;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) g.m(i, j) = payoff(unit(n, i), unit(k, j)) - g.a(i) - g.b(j) - g.c;

    Rng rng(seed);
    for (std::size_t p = 0; p < probes; ++p) {
        const Vec l = random_point(lambda_set, rng);
        const Vec u = random_point(u_set, rng);
        const double got = payoff(l, u);
        const double want = g(l, u);
        const double scale = 1.0 + std::abs(got) + g.m.cwiseAbs().sum() * (1.0 + l.norm()) * (1.0 + u.norm());
        if (!(std::abs(got - want) <= 1e-9 * scale))
            throw InvalidArgument("solve_game: payoff is not bilinear (probe " + std::to_string(p) + " differs by " +
                                  format_double(got - want) + ")");
    }
    return g;
}

std::optional<double> game_value(const BilinearPayoff& g, const Domain& lambda_set, const Domain& u_set) {
    const auto enc = encode_lambda(lambda_set);
    if (!enc) return std::nullopt;
    const auto n = static_cast<Eigen::Index>(lambda_set.dim());
    const auto k = static_cast<Eigen::Index>(u_set.dim());
    const Vec w0 = g.m.transpose() * enc->offset + g.b;
    const Mat mt = g.m.transpose();

    // variables: y (n) | t+ (nt) | t- (nt)
    Eigen::Index nt;
    Mat inner_a;  // rows: t-coefficients in the inner-min constraints
    Mat inner_y;
    Vec inner_b;
    if (const auto* box = dynamic_cast<const BoxDomain*>(&u_set)) {
        nt = k;
        inner_a = Mat::Zero(2 * k, nt);
        inner_y = Mat::Zero(2 * k, n);
        inner_b = Vec::Zero(2 * k);
        for (Eigen::Index j = 0; j < k; ++j) {
            // t_j <= lo_j w_j and t_j <= hi_j w_j
            const double bounds[2] = {box->lo()(j), box->hi()(j)};
            for (int side = 0; side < 2; ++side) {
                const Eigen::Index r = 2 * j + side;
                inner_a(r, j) = 1.0;
                inner_y.row(r) = -bounds[side] * mt.row(j);
                inner_b(r) = bounds[side] * w0(j);
            }
        }
    } else if (dynamic_cast<const SimplexDomain*>(&u_set)) {
        nt = 1;
        inner_a = Mat::Ones(k, 1);
        inner_y = -mt;
        inner_b = w0;
    } else {
        return std::nullopt;
    }

    const Eigen::Index nv = n + 2 * nt;
    LinearProgram lp;
    lp.c = Vec::Zero(nv);
    lp.c.head(n) = g.a;
    lp.c.segment(n, nt).setOnes();
    lp.c.tail(nt).setConstant(-1.0);

    const Eigen::Index rows_ub = enc->a_ub.rows() + inner_a.rows();
    lp.a_ub = Mat::Zero(rows_ub, nv);
    lp.b_ub = Vec(rows_ub);
    lp.a_ub.topLeftCorner(enc->a_ub.rows(), n) = enc->a_ub;
    lp.b_ub.head(enc->a_ub.rows()) = enc->b_ub;
    const Eigen::Index r0 = enc->a_ub.rows();
    lp.a_ub.block(r0, 0, inner_a.rows(), n) = inner_y;
    lp.a_ub.block(r0, n, inner_a.rows(), nt) = inner_a;
    lp.a_ub.block(r0, n + nt, inner_a.rows(), nt) = -inner_a;
    lp.b_ub.tail(inner_a.rows()) = inner_b;
    lp.a_eq = Mat::Zero(enc->a_eq.rows(), nv);
    lp.a_eq.leftCols(n) = enc->a_eq;
    lp.b_eq = enc->b_eq;

    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::optimal) throw Error("game_value: linear program did not reach an optimum");
    return res.objective + g.a.dot(enc->offset) + g.c;
}

GameResult solve_game(const GameConfig& cfg) {
    if (!cfg.lambda_set || !cfg.u_set) throw InvalidArgument("solve_game: both decision sets are required");
    if (cfg.rounds < 1) throw InvalidArgument("solve_game: rounds must be >= 1");
    const Domain& lam = *cfg.lambda_set;
    const Domain& uset = *cfg.u_set;
    BilinearPayoff g = extract_bilinear(cfg.payoff, lam, uset, cfg.bilinearity_probes, cfg.seed);

    // the lambda-player's loss is -g(., u_t), with gradient -(M u_t + a)
    const double grad_bound = g.a.norm() + g.m.norm() * uset.max_norm();
    const double diameter = lam.diameter();
    double eta;
    if (cfg.eta) {
        eta = *cfg.eta;
    } else if (diameter > 0.0 && grad_bound > 0.0) {
        eta = ogd_step_size(diameter, grad_bound, cfg.rounds);
    } else {
        eta = 1.0;  // any step is optimal when the game is degenerate
    }
    if (!(eta > 0.0)) throw InvalidArgument("solve_game: step size must be positive");

    OgdState state(lam.project(Vec::Zero(static_cast<Eigen::Index>(lam.dim()))), eta);
    Vec u_sum = Vec::Zero(static_cast<Eigen::Index>(uset.dim()));
    std::vector<Vec> responses;
    responses.reserve(cfg.rounds);
    for (std::size_t t = 0; t < cfg.rounds; ++t) {
        const Vec u = uset.argmin_linear(g.m.transpose() * state.current + g.b);
        u_sum += u;
        responses.push_back(u);
        ogd_step(state, -(g.m * u + g.a), lam);
    }

    GameResult out{average_iterate(state), u_sum / static_cast<double>(cfg.rounds), g, {}, state, std::move(responses)};
    GameCertificate& cert = out.certificate;
    cert.regret = realized_regret(state, lam);
    cert.gradient_bound = grad_bound;
    cert.regret_bound = diameter * grad_bound * std::sqrt(static_cast<double>(cfg.rounds));
    cert.lower_value = uset.min_linear(g.m.transpose() * out.lambda_bar + g.b) + g.a.dot(out.lambda_bar) + g.c;
    cert.upper_value = -lam.min_linear(-(g.m * out.u_bar + g.a)) + g.b.dot(out.u_bar) + g.c;
    cert.value = game_value(g, lam, uset);
    return out;
}

}  // namespace appropo

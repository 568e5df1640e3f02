/*
   Copyright 2026 The steinrule Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "steinrule/distributions.hpp"
#include "steinrule/linalg.hpp"
#include "steinrule/model.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/rng.hpp"
#include "steinrule/shrinkage.hpp"

namespace steinrule {

/// Number of standard errors allowed for sampling noise in every MC check.
inline constexpr double kSigmaTolerance = 3.0;

/// Relative floor added to MC tolerances for checks that are exact identities
/// draw by draw (floating-point rounding only).
inline constexpr double kRoundingFloor = 1e-12;

/// Monte Carlo estimates of the moments entering the risk of beta_hat + c h d.
///
///   eta(h)   = E[h U1'(U1 - U2)]      omega(h) = E[h^2 ||U1 - U2||^2]
///   eta      = E[U1'PZ / Z'RZ]        eta_ddag = E[|U1'PZ| / Z'RZ]
///   omega    = E[1 / Z'RZ]
struct RiskMoments {
    double eta_h = 0.0;
    double omega_h = 0.0;
    double eta = 0.0;
    double eta_ddag = 0.0;
    double omega = 0.0;
    double se_eta_h = 0.0;
    double se_omega_h = 0.0;
    double se_eta = 0.0;
    double se_eta_ddag = 0.0;
    double se_omega = 0.0;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    /// False when the dimension is below 3: the inverse moments may not exist.
    bool reliable = true;
    /// Full sample covariance of the five integrands, in the order above.
    Eigen::Matrix<double, 5, 5> cov = Eigen::Matrix<double, 5, 5>::Zero();

    /// Standard error of trace(A) - 2 c eta(h) + c^2 omega(h).
    double mse_se(double c) const
    {
        Eigen::Matrix<double, 5, 1> w = Eigen::Matrix<double, 5, 1>::Zero();
        w[0] = -2.0 * c;
        w[1] = c * c;
        return count ? std::sqrt(std::max(w.dot(cov * w), 0.0) / static_cast<double>(count)) : 0.0;
    }
};

/// Outcome of one inequality check: holds <=> lhs <= rhs + tolerance.
struct BoundReport {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double slack = 0.0;
    double tolerance = 0.0;
    bool applicable = true;
    std::string note;

    static BoundReport make(std::string name, double lhs, double rhs, double tolerance,
                            std::string note = {})
    {
        BoundReport r;
        r.name = std::move(name);
        r.lhs = lhs;
        r.rhs = rhs;
        r.tolerance = tolerance;
        r.slack = rhs - lhs;
        r.holds = lhs <= rhs + tolerance;
        r.note = std::move(note);
        return r;
    }

    static BoundReport not_applicable(std::string name, std::string note)
    {
        BoundReport r;
        r.name = std::move(name);
        r.applicable = false;
        r.holds = false;
        r.lhs = r.rhs = r.slack = std::numeric_limits<double>::quiet_NaN();
        r.note = std::move(note);
        return r;
    }
};

/// trace(A) - 2 c eta(h) + c^2 omega(h): risk of beta_hat - c h (beta_hat - beta_tilde),
/// i.e. of combine() with ShrinkageSpec::toward(h, c).
inline double mse_analytic(const JointMoments& m, const RiskMoments& moments, double c)
{
    return m.a.trace() - 2.0 * c * moments.eta_h + c * c * moments.omega_h;
}

namespace detail {

/// Per-draw quantities shared by the estimators below.
struct DrawGeometry {
    VectorXd u1;
    VectorXd u2;
    VectorXd d;        // U1 - U2
    VectorXd z;        // P^+ d
    double d2 = 0.0;   // ||d||^2
    double zrz = 0.0;  // Z'RZ
    double u1pz = 0.0; // U1'PZ
    double w2 = 0.0;   // ||W||^2 = ||U1||^2 + ||Z||^2

    void compute(const JointMoments& m, const JointSampler& sampler, std::uint64_t seed,
                 std::uint64_t index)
    {
        sampler.draw(seed, index, u1, u2);
        d = u1 - u2;
        d2 = d.squaredNorm();
        z = m.p_pinv * d;
        const VectorXd pz = m.p * z;
        zrz = z.dot(m.r * z);
        u1pz = u1.dot(pz);
        w2 = u1.squaredNorm() + z.squaredNorm();
    }
};

inline double eval_h(const HFunction& h, const DrawGeometry& g)
{
    if (h.kind() == HKind::Custom)
        return h(g.u1, g.u2);
    return h.of_squared_distance(g.d2);
}

}  // namespace detail

/// Monte Carlo estimate of eta(h), omega(h), eta, eta_ddag, omega from `count` draws.
inline RiskMoments estimate_risk_moments(const JointMoments& m, const HFunction& h,
                                         const JointSampler& sampler, std::size_t count,
                                         std::uint64_t seed)
{
    if (sampler.k() != m.k())
        throw ConfigError("sampler dimension does not match the moment structure");
    const auto est = monte_carlo_means<5>(count, [&](std::size_t i) {
        detail::DrawGeometry g;
        g.compute(m, sampler, seed, i);
        if (g.d2 == 0.0 || g.zrz == 0.0)
            return std::array<double, 5>{0.0, 0.0, 0.0, 0.0, 0.0};
        const double hv = detail::eval_h(h, g);
        const double u1d = g.u1.dot(g.d);
        return std::array<double, 5>{hv * u1d, hv * hv * g.d2, g.u1pz / g.zrz,
                                     std::abs(g.u1pz) / g.zrz, 1.0 / g.zrz};
    });
    RiskMoments r;
    r.eta_h = est.mean[0];
    r.omega_h = est.mean[1];
    r.eta = est.mean[2];
    r.eta_ddag = est.mean[3];
    r.omega = est.mean[4];
    r.se_eta_h = est.se(0);
    r.se_omega_h = est.se(1);
    r.se_eta = est.se(2);
    r.se_eta_ddag = est.se(3);
    r.se_omega = est.se(4);
    r.count = est.count;
    r.seed = seed;
    r.reliable = m.q >= 3;
    r.cov = est.cov;
    return r;
}

/// Empirical risk of combine(pair, spec) over fresh draws: mean and standard error
/// of ||estimate - beta||^2 in U coordinates.
inline std::pair<double, double> empirical_mse(const JointSampler& sampler, const ShrinkageSpec& spec,
                                               std::size_t count, std::uint64_t seed)
{
    const VectorXd zero = VectorXd::Zero(sampler.k());
    const auto est = monte_carlo_means<1>(count, [&](std::size_t i) {
        VectorXd u1, u2;
        sampler.draw(seed, i, u1, u2);
        const VectorXd e = combine(EstimatePair{u1, u2}, spec).estimate;
        return std::array<double, 1>{e.squaredNorm()};
    });
    return {est.mean[0], est.se(0)};
}

/// Mean and standard error of ||estimate - beta||^2 - ||beta_hat - beta||^2.
/// trace(A) plus the mean is an unbiased risk estimate without the sampling
/// noise of the base estimator's own loss.
inline std::pair<double, double> empirical_risk_difference(const JointSampler& sampler,
                                                           const ShrinkageSpec& spec,
                                                           std::size_t count, std::uint64_t seed)
{
    const auto est = monte_carlo_means<1>(count, [&](std::size_t i) {
        VectorXd u1, u2;
        sampler.draw(seed, i, u1, u2);
        const VectorXd e = combine(EstimatePair{u1, u2}, spec).estimate;
        return std::array<double, 1>{e.squaredNorm() - u1.squaredNorm()};
    });
    return {est.mean[0], est.se(0)};
}

/// |eta(h)| <= q0 eta_ddag and omega(h) <= q0^2 omega.
inline std::pair<BoundReport, BoundReport> check_prop_eta_omega(const RiskMoments& mo, double q0)
{
    if (!std::isfinite(q0)) {
        return {BoundReport::not_applicable("eta(h) <= q0 eta_ddag", "h has no finite q0"),
                BoundReport::not_applicable("omega(h) <= q0^2 omega", "h has no finite q0")};
    }
    const double tol_eta = kSigmaTolerance * std::hypot(mo.se_eta_h, q0 * mo.se_eta_ddag);
    const double tol_omega = kSigmaTolerance * std::hypot(mo.se_omega_h, q0 * q0 * mo.se_omega);
    const double floor_eta = kRoundingFloor * q0 * mo.eta_ddag;
    const double floor_omega = kRoundingFloor * q0 * q0 * mo.omega;
    return {BoundReport::make("|eta(h)| <= q0 eta_ddag", std::abs(mo.eta_h), q0 * mo.eta_ddag,
                              tol_eta + floor_eta),
            BoundReport::make("omega(h) <= q0^2 omega", mo.omega_h, q0 * q0 * mo.omega,
                              tol_omega + floor_omega)};
}

/// E[(|U1'PZ| / Z'RZ) 1{||W|| <= alpha}] <= alpha^2 psi1 omega / 2.
inline BoundReport check_born1(const JointMoments& m, const JointSampler& sampler, double alpha,
                               std::size_t count, std::uint64_t seed)
{
    if (!(alpha > 0.0))
        throw ConfigError("alpha must be positive");
    const double a2 = alpha * alpha;
    const auto est = monte_carlo_means<2>(count, [&](std::size_t i) {
        detail::DrawGeometry g;
        g.compute(m, sampler, seed, i);
        if (g.zrz == 0.0)
            return std::array<double, 2>{0.0, 0.0};
        const double inside = g.w2 <= a2 ? 1.0 : 0.0;
        return std::array<double, 2>{inside * std::abs(g.u1pz) / g.zrz, 1.0 / g.zrz};
    });
    const double factor = a2 * m.psi1 / 2.0;
    Eigen::Vector2d w(1.0, -factor);
    const double tol = kSigmaTolerance * est.se_of(w);
    return BoundReport::make("born1 (alpha=" + std::to_string(alpha) + ")", est.mean[0],
                             factor * est.mean[1], tol);
}

/// E[(|W'FW| / Z'RZ) 1{||W|| > alpha}] <= psi1 [trace(A) + q + mu'mu] / (alpha^2 psi0).
inline BoundReport check_born2(const JointMoments& m, const JointSampler& sampler, double alpha,
                               std::size_t count, std::uint64_t seed)
{
    if (!(alpha > 0.0))
        throw ConfigError("alpha must be positive");
    const double a2 = alpha * alpha;
    const auto est = monte_carlo_means<1>(count, [&](std::size_t i) {
        detail::DrawGeometry g;
        g.compute(m, sampler, seed, i);
        if (g.zrz == 0.0)
            return std::array<double, 1>{0.0};
        const double outside = g.w2 > a2 ? 1.0 : 0.0;
        return std::array<double, 1>{outside * std::abs(g.u1pz) / g.zrz};
    });
    const double rhs =
        m.psi1 * (m.a.trace() + m.q + m.mu.squaredNorm()) / (a2 * m.psi0);
    return BoundReport::make("born2 (alpha=" + std::to_string(alpha) + ")", est.mean[0], rhs,
                             kSigmaTolerance * est.se(0));
}

/// eta_ddag < omega + psi1^2 (trace(A) + q + mu'mu) / (2 psi0).
inline BoundReport check_corinterm(const JointMoments& m, const RiskMoments& mo)
{
    const double rhs =
        mo.omega + m.psi1 * m.psi1 * (m.a.trace() + m.q + m.mu.squaredNorm()) / (2.0 * m.psi0);
    Eigen::Matrix<double, 5, 1> w = Eigen::Matrix<double, 5, 1>::Zero();
    w[3] = 1.0;
    w[4] = -1.0;
    const double se = mo.count ? std::sqrt(std::max(w.dot(mo.cov * w), 0.0) / double(mo.count)) : 0.0;
    return BoundReport::make("eta_ddag bound", mo.eta_ddag, rhs, kSigmaTolerance * se);
}

/// Rayleigh-quotient inequalities for an m x m matrix C on random vectors:
///   |x'Cx| <= max|eig(C)| x'x               (C symmetric only)
///   |x'Cx| <= max|eig(C + C')| x'x / 2
///   |y'Cx| <= max|eig(B0)| (x'x + y'y) / 2,   B0 = [[0, C'], [C, 0]]
/// Each report's lhs is the largest observed ratio of the two sides; rhs is 1
/// and there is no tolerance.
inline std::vector<BoundReport> check_courant(const MatrixXd& c, std::size_t trials,
                                              std::uint64_t seed)
{
    const Eigen::Index n = c.rows();
    if (c.cols() != n || n < 1)
        throw ConfigError("Courant check needs a square matrix");
    const bool symmetric = (c - c.transpose()).cwiseAbs().maxCoeff() == 0.0;
    const double lam_c = symmetric ? SymmetricEigen(c).max_abs() : 0.0;
    const double lam_sym = SymmetricEigen(c + c.transpose()).max_abs();
    MatrixXd b0 = MatrixXd::Zero(2 * n, 2 * n);
    b0.topRightCorner(n, n) = c.transpose();
    b0.bottomLeftCorner(n, n) = c;
    const double lam_b0 = SymmetricEigen(b0).max_abs();

    double worst_sym = 0.0, worst_quad = 0.0, worst_bilin = 0.0;
    std::size_t bad_sym = 0, bad_quad = 0, bad_bilin = 0;
    VectorXd x(n), y(n);
    for (std::size_t t = 0; t < trials; ++t) {
        CounterRng rng(seed, t);
        fill_standard_normal(rng, x);
        fill_standard_normal(rng, y);
        const double xx = x.squaredNorm();
        const double yy = y.squaredNorm();
        const double xcx = std::abs(x.dot(c * x));
        const double ycx = std::abs(y.dot(c * x));
        if (symmetric) {
            const double bound = lam_c * xx;
            bad_sym += xcx > bound;
            worst_sym = std::max(worst_sym, bound > 0 ? xcx / bound : (xcx > 0 ? std::numeric_limits<double>::infinity() : 0.0));
        }
        const double bq = 0.5 * lam_sym * xx;
        bad_quad += xcx > bq;
        worst_quad = std::max(worst_quad, bq > 0 ? xcx / bq : (xcx > 0 ? std::numeric_limits<double>::infinity() : 0.0));
        const double bb = 0.5 * lam_b0 * (xx + yy);
        bad_bilin += ycx > bb;
        worst_bilin = std::max(worst_bilin, bb > 0 ? ycx / bb : (ycx > 0 ? std::numeric_limits<double>::infinity() : 0.0));
    }

    auto report = [&](std::string name, double worst, std::size_t bad) {
        BoundReport r = BoundReport::make(std::move(name), worst, 1.0, 0.0,
                                          std::to_string(bad) + " violations in " +
                                              std::to_string(trials) + " trials");
        r.holds = bad == 0;
        return r;
    };
    std::vector<BoundReport> out;
    if (symmetric)
        out.push_back(report("courant |x'Cx| (m=" + std::to_string(n) + ")", worst_sym, bad_sym));
    out.push_back(report("courant |x'Cx| via C+C' (m=" + std::to_string(n) + ")", worst_quad, bad_quad));
    out.push_back(report("courant |y'Cx| via B0 (m=" + std::to_string(n) + ")", worst_bilin, bad_bilin));
    return out;
}

/// Singular-case checks with weighting matrix Lambda:
///   Lambda^(1/2) Xi Lambda^(1/2) idempotent, Lambda Xi Lambda gamma = Lambda gamma (1e-8),
///   omega(h) < q0 trace(Lambda Xi Lambda) / (q - 2)                   (q >= 3),
///   mean of d' Lambda Xi Lambda d equals q + gamma' Lambda Xi Lambda gamma.
inline std::vector<BoundReport> check_singular_omega(const JointMoments& m, const HFunction& h,
                                                     const MatrixXd& lambda,
                                                     const JointSampler& sampler, std::size_t count,
                                                     std::uint64_t seed)
{
    if (!h.depends_only_on_difference() || h.kind() == HKind::Custom)
        throw ConfigError("singular-case bound needs h to depend on beta_hat - beta_tilde only");
    if (!std::isfinite(h.q0()))
        throw ConfigError("singular-case bound needs a finite q0");

    constexpr double kH3Tolerance = 1e-8;
    std::vector<BoundReport> out;

    const MatrixXd root = spd_sqrt(lambda);
    const MatrixXd proj = root * m.xi * root;
    const double idem = (proj * proj - proj).cwiseAbs().maxCoeff();
    out.push_back(BoundReport::make("H3 idempotent", idem, kH3Tolerance, 0.0));

    const MatrixXd lxl = symmetrize(lambda * m.xi * lambda);
    const VectorXd lg = lambda * m.gamma;
    const double bias_err = (lxl * m.gamma - lg).cwiseAbs().maxCoeff();
    const double bias_scale = std::max(1.0, lg.cwiseAbs().maxCoeff());
    out.push_back(BoundReport::make("H3 bias", bias_err, kH3Tolerance * bias_scale, 0.0));

    const auto est = monte_carlo_means<2>(count, [&](std::size_t i) {
        VectorXd u1, u2;
        sampler.draw(seed, i, u1, u2);
        const VectorXd d = u1 - u2;
        const double d2 = d.squaredNorm();
        const double hv = d2 > 0.0 ? h.of_squared_distance(d2) : 0.0;
        return std::array<double, 2>{hv * hv * d2, d.dot(lxl * d)};
    });

    const double noncentrality = m.gamma.dot(lxl * m.gamma);
    if (m.q >= 3) {
        const double rhs = h.q0() * lxl.trace() / (m.q - 2);
        out.push_back(BoundReport::make("singular omega(h) bound (q=" + std::to_string(m.q) + ")",
                                        est.mean[0], rhs, kSigmaTolerance * est.se(0)));
    } else {
        out.push_back(BoundReport::not_applicable(
            "singular omega(h) bound (q=" + std::to_string(m.q) + ")",
            "needs q >= 3; E[1/chi^2_q] diverges"));
    }
    const double expected = m.q + noncentrality;
    out.push_back(BoundReport::make("noncentral chi-square mean", std::abs(est.mean[1] - expected),
                                    0.0, kSigmaTolerance * est.se(1),
                                    "mean " + std::to_string(est.mean[1]) + " vs " +
                                        std::to_string(expected)));
    return out;
}

/// Elliptical-case checks on Z = P^+ (U1 - U2):
///   E[1/Z'Z] < int t|kappa(t)| dt / (q - 2),
///   E[1/Z'Z] / max eig(R) <= omega <= E[1/Z'Z] / min eig(R).
inline std::vector<BoundReport> check_elliptical_omega(const JointMoments& m,
                                                       const EllipticalSpec& spec,
                                                       std::size_t count, std::uint64_t seed)
{
    const JointSampler sampler(m, spec);
    const auto est = monte_carlo_means<2>(count, [&](std::size_t i) {
        detail::DrawGeometry g;
        g.compute(m, sampler, seed, i);
        const double zz = g.z.squaredNorm();
        if (zz == 0.0 || g.zrz == 0.0)
            return std::array<double, 2>{0.0, 0.0};
        return std::array<double, 2>{1.0 / zz, 1.0 / g.zrz};
    });
    std::vector<BoundReport> out;
    const std::string tag = " [" + spec.name() + "]";
    if (m.q >= 3) {
        const double cap = spec.first_abs_moment() / (m.q - 2);
        out.push_back(BoundReport::make("E[1/Z'Z] cap" + tag, est.mean[0], cap,
                                        kSigmaTolerance * est.se(0)));
    } else {
        out.push_back(BoundReport::not_applicable("E[1/Z'Z] cap" + tag, "needs q >= 3"));
    }
    const SymmetricEigen eig(m.r);
    const double lmin = eig.values.minCoeff();
    const double lmax = eig.values.maxCoeff();
    const Eigen::Vector2d lower(1.0 / lmax, -1.0);
    const Eigen::Vector2d upper(-1.0 / lmin, 1.0);
    out.push_back(BoundReport::make("omega sandwich lower" + tag, est.mean[0] / lmax, est.mean[1],
                                    kSigmaTolerance * est.se_of(lower) +
                                        kRoundingFloor * est.mean[1]));
    out.push_back(BoundReport::make("omega sandwich upper" + tag, est.mean[1], est.mean[0] / lmin,
                                    kSigmaTolerance * est.se_of(upper) +
                                        kRoundingFloor * est.mean[1]));
    return out;
}

}  // namespace steinrule

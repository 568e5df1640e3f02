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


#include <gtest/gtest.h>

#include <cmath>

#include "steinrule/risk.hpp"
#include "steinrule/verification.hpp"

using namespace steinrule;

namespace {

constexpr std::size_t kDraws = 1000000;

void expect_holds(const BoundReport& r)
{
    EXPECT_TRUE(r.applicable) << r.name;
    EXPECT_TRUE(r.holds) << r.name << ": lhs " << r.lhs << " rhs " << r.rhs << " tol " << r.tolerance;
}

}  // namespace

TEST(RiskMoments, IdentityInstanceValues)
{
    const auto m = identity_instance(3);
    const JointSampler sampler(m);
    const auto mo = estimate_risk_moments(m, HFunction::inverse_sq_norm(), sampler, kDraws, 101);
    EXPECT_NEAR(mo.eta_h, 0.5, 3.0 * mo.se_eta_h);
    EXPECT_NEAR(mo.omega_h, 0.5, 3.0 * mo.se_omega_h);
    EXPECT_NEAR(mo.eta, 0.5, 3.0 * mo.se_eta);
    EXPECT_NEAR(mo.omega, 0.5, 3.0 * mo.se_omega);
    EXPECT_TRUE(mo.reliable);
    // With P = sqrt(2) I, U1'PZ / Z'RZ = U1'd / ||d||^2 draw by draw.
    EXPECT_NEAR(mo.eta, mo.eta_h, 1e-12 * std::abs(mo.eta_h));
    EXPECT_NEAR(mo.omega, mo.omega_h, 1e-12 * mo.omega_h);

    const double c = optimal_c(mo.eta_h, mo.omega_h);
    EXPECT_NEAR(c, 1.0, 0.05);
    EXPECT_NEAR(mse_analytic(m, mo, c), 2.5, 3.0 * mo.mse_se(c) + 0.01);
}

TEST(RiskMoments, EmpiricalMseMatchesDecomposition)
{
    const auto m = correlated_diag_instance(4, 17);
    const JointSampler sampler(m);
    for (const auto& h : {HFunction::inverse_sq_norm(), HFunction::smooth_inverse(2.0)}) {
        const auto mo = estimate_risk_moments(m, h, sampler, 200000, 202);
        for (double c : {-0.5 * m.a.trace(), 0.0, 0.3, 1.0}) {
            const auto spec = ShrinkageSpec::toward(h, c);
            const auto [emp, emp_se] = empirical_mse(sampler, spec, 200000, 303);
            const double se = std::hypot(emp_se, mo.mse_se(c));
            EXPECT_LE(std::abs(emp - mse_analytic(m, mo, c)), 3.0 * se + 1e-12)
                << h.name() << " c=" << c;
        }
    }
}

TEST(RiskMoments, ZeroIntensityIsTraceA)
{
    const auto m = correlated_diag_instance(3, 5);
    const JointSampler sampler(m);
    const auto [emp, se] = empirical_mse(sampler, {HFunction::zero(), 0.0}, 200000, 9);
    EXPECT_NEAR(emp, m.a.trace(), 3.0 * se);
}

TEST(Bounds, EtaOmegaPropositionHolds)
{
    for (const auto& inst : default_instances(3, 7)) {
        const JointSampler sampler(inst.moments);
        for (const auto& h : {HFunction::inverse_sq_norm(), HFunction::smooth_inverse(2.0),
                              HFunction::smooth_inverse(4.0)}) {
            const auto mo = estimate_risk_moments(inst.moments, h, sampler, 200000, 11);
            const auto [eta, omega] = check_prop_eta_omega(mo, h.q0());
            expect_holds(eta);
            expect_holds(omega);
            EXPECT_GE(eta.slack, -eta.tolerance);
        }
    }
    const auto m = identity_instance(3);
    const auto mo = estimate_risk_moments(m, HFunction::one(), JointSampler(m), 1000, 1);
    EXPECT_FALSE(check_prop_eta_omega(mo, HFunction::one().q0()).first.applicable);
}

TEST(Bounds, Born1IdentityInstance)
{
    const auto m = identity_instance(3);
    const JointSampler sampler(m);
    expect_holds(check_born1(m, sampler, 1.0, kDraws, 21));
    const auto wide = check_born1(m, sampler, 10.0, 200000, 22);
    expect_holds(wide);
    EXPECT_NEAR(wide.rhs, 50.0 * std::sqrt(2.0) * 0.5, 2.0);
    EXPECT_THROW(check_born1(m, sampler, 0.0, 10, 1), ConfigError);
}

TEST(Bounds, Born2IdentityRhs)
{
    const auto m = identity_instance(3);
    const auto r = check_born2(m, JointSampler(m), 1.0, kDraws, 31);
    EXPECT_NEAR(r.rhs, 3.0 * std::sqrt(2.0), 1e-12);
    expect_holds(r);
}

TEST(Bounds, Born2BiasedInstanceIncludesMu)
{
    const auto m = biased_instance(3);
    EXPECT_NEAR(m.mu.squaredNorm(), 0.5, 1e-12);
    const auto r = check_born2(m, JointSampler(m), 1.0, 200000, 32);
    EXPECT_NEAR(r.rhs, std::sqrt(2.0) * 6.5 / 2.0, 1e-12);
    expect_holds(r);
}

TEST(Bounds, CorintermIdentityRhs)
{
    const auto m = identity_instance(3);
    const auto mo = estimate_risk_moments(m, HFunction::inverse_sq_norm(), JointSampler(m), kDraws, 41);
    const auto r = check_corinterm(m, mo);
    EXPECT_NEAR(r.rhs - mo.omega, 3.0, 1e-12);
    expect_holds(r);
    EXPECT_LT(r.lhs, 3.5);
}

TEST(Bounds, CorintermRandomizedSuite)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const int k = 3 + static_cast<int>(s % 3);
        CounterRng rng(500, s);
        MatrixXd g(2 * k, 2 * k);
        for (Eigen::Index i = 0; i < g.size(); ++i)
            g.data()[i] = standard_normal(rng);
        const MatrixXd cov = g * g.transpose() / (2.0 * k) + 0.1 * MatrixXd::Identity(2 * k, 2 * k);
        VectorXd gamma(k);
        fill_standard_normal(rng, gamma);
        const auto m = JointMoments::from_blocks(cov.topLeftCorner(k, k), cov.topRightCorner(k, k),
                                                 cov.bottomRightCorner(k, k), gamma);
        const auto mo = estimate_risk_moments(m, HFunction::inverse_sq_norm(), JointSampler(m), 20000, s);
        expect_holds(check_corinterm(m, mo));
    }
}

TEST(Bounds, CourantHasNoViolations)
{
    for (int n = 2; n <= 8; ++n) {
        CounterRng rng(600, n);
        MatrixXd c(n, n);
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c.data()[i] = standard_normal(rng);
        for (const auto& r : check_courant(c, 10000, n))
            expect_holds(r);
        const MatrixXd sym = c + c.transpose();
        const auto reports = check_courant(sym, 10000, n + 100);
        EXPECT_EQ(reports.size(), 3u);
        for (const auto& r : reports) {
            expect_holds(r);
            EXPECT_LE(r.lhs, 1.0);
        }
    }
    EXPECT_THROW(check_courant(MatrixXd::Zero(2, 3), 10, 1), ConfigError);
}

TEST(Bounds, SingularRestrictionChecks)
{
    const auto [m, lambda] = singular_instance(3, 8);
    EXPECT_EQ(m.q, 3);
    EXPECT_EQ(m.k(), 4);
    const auto reports = check_singular_omega(m, HFunction::inverse_sq_norm(), lambda,
                                              JointSampler(m), 200000, 81);
    ASSERT_EQ(reports.size(), 4u);
    EXPECT_EQ(reports[0].name, "H3 idempotent");
    for (const auto& r : reports)
        expect_holds(r);
    EXPECT_THROW(check_singular_omega(m, HFunction::one(), lambda, JointSampler(m), 10, 1),
                 ConfigError);
}

TEST(Bounds, SingularRankTwoIsNotApplicable)
{
    const auto [m, lambda] = singular_instance(2, 8);
    const auto reports = check_singular_omega(m, HFunction::inverse_sq_norm(), lambda,
                                              JointSampler(m), 1000, 1);
    EXPECT_FALSE(reports[2].applicable);
}

TEST(Bounds, EllipticalOmegaChecks)
{
    const auto m = biased_instance(3);
    for (const auto& spec : {EllipticalSpec::dirac(), EllipticalSpec::gamma(5.0),
                             EllipticalSpec::two_point(0.5, 2.0, 0.3)}) {
        const auto reports = check_elliptical_omega(m, spec, 400000, 91);
        ASSERT_EQ(reports.size(), 3u);
        for (const auto& r : reports)
            expect_holds(r);
    }
    // mu'mu > 0 keeps the Gaussian cap strictly below 1 / (q - 2).
    const auto dirac = check_elliptical_omega(m, EllipticalSpec::dirac(), 400000, 92);
    EXPECT_LT(dirac[0].lhs, 1.0);
}

TEST(Bounds, DimensionTwoIsFlaggedUnreliable)
{
    const auto m = identity_instance(2);
    const auto mo = estimate_risk_moments(m, HFunction::inverse_sq_norm(), JointSampler(m), 1000, 1);
    EXPECT_FALSE(mo.reliable);
}

TEST(RiskMoments, RiskDifferenceAgreesWithPlainEstimate)
{
    const auto m = correlated_diag_instance(3, 23);
    const JointSampler sampler(m);
    const auto spec = ShrinkageSpec::toward(HFunction::inverse_sq_norm(), 0.1);
    const auto [plain, plain_se] = empirical_mse(sampler, spec, 200000, 24);
    const auto [diff, diff_se] = empirical_risk_difference(sampler, spec, 200000, 24);
    const auto [base, base_se] = empirical_mse(sampler, {HFunction::zero(), 0.0}, 200000, 24);
    // Same draws: the identity plain = base + diff holds up to rounding.
    EXPECT_NEAR(plain, base + diff, 1e-10 * plain);
    EXPECT_LT(diff_se, plain_se);
    EXPECT_NEAR(m.a.trace() + diff, plain, 3.0 * std::hypot(plain_se, diff_se));
}

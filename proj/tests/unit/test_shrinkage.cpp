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

#include "steinrule/shrinkage.hpp"
#include "steinrule/simulation.hpp"

using namespace steinrule;

TEST(HFunction, SmoothInverseBoundClosedForm)
{
    for (double p : {2.5, 3.0, 4.0, 6.0, 10.0}) {
        const double want = ((p - 2.0) / p) * std::pow(2.0 / (p - 2.0), 2.0 / p);
        EXPECT_NEAR(HFunction::smooth_inverse(p).q0(), want, 1e-9) << "p=" << p;
    }
    EXPECT_NEAR(HFunction::smooth_inverse(2.0).q0(), 1.0, 1e-12);
    EXPECT_THROW(HFunction::smooth_inverse(1.5), ConfigError);
}

TEST(HFunction, BoundHoldsOnGrid)
{
    const auto h = HFunction::smooth_inverse(3.0);
    for (double d2 = 1e-6; d2 < 1e6; d2 *= 1.7)
        EXPECT_LE(d2 * h.of_squared_distance(d2), h.q0() * (1.0 + 1e-12));
    const auto inv = HFunction::inverse_sq_norm();
    EXPECT_NEAR(3.7 * inv.of_squared_distance(3.7), 1.0, 1e-15);
    EXPECT_TRUE(std::isinf(HFunction::one().q0()));
}

TEST(HFunction, ParseKinds)
{
    EXPECT_EQ(parse_h("zero").kind(), HKind::Zero);
    EXPECT_EQ(parse_h("one").kind(), HKind::One);
    EXPECT_EQ(parse_h("inverse-sq").kind(), HKind::InverseSqNorm);
    EXPECT_EQ(parse_h("smooth:4").exponent(), 4.0);
    EXPECT_EQ(parse_h("smooth:4").name(), "smooth:4");
    EXPECT_THROW(parse_h("cubic"), ConfigError);
    EXPECT_THROW(parse_h("smooth:x"), ConfigError);
}

TEST(Combine, SpecialMembers)
{
    const VectorXd bh = Eigen::Vector3d(1.0, 2.0, 3.0);
    const VectorXd bt = Eigen::Vector3d(0.5, 2.5, 2.0);
    const EstimatePair pair{bh, bt};
    EXPECT_EQ(combine(pair, {HFunction::zero(), 3.0}).estimate, bh);
    EXPECT_EQ(combine(pair, {HFunction::inverse_sq_norm(), 0.0}).estimate, bh);
    EXPECT_LT((combine(pair, {HFunction::one(), -1.0}).estimate - bt).norm(), 1e-15);

    const double c = 0.8;
    const VectorXd d = bh - bt;
    const VectorXd want = bh - c * d / d.squaredNorm();
    EXPECT_LT((combine(pair, ShrinkageSpec::toward(HFunction::inverse_sq_norm(), c)).estimate - want)
                  .norm(),
              1e-15);
}

TEST(Combine, CoincidentEstimatesAreFlagged)
{
    const VectorXd b = Eigen::Vector3d(1.0, 2.0, 3.0);
    const auto res = combine({b, b}, {HFunction::inverse_sq_norm(), -1.0});
    EXPECT_TRUE(res.degenerate_difference);
    EXPECT_EQ(res.estimate, b);
    EXPECT_THROW(combine({b, VectorXd::Zero(2)}, {HFunction::one(), 1.0}), ConfigError);
}

TEST(SpslIntensity, MatchesScalarTraceArithmetic)
{
    const MatrixXd x = generate_design(15, 3, 0.6, 9);
    VectorXd y(15);
    for (int i = 0; i < 15; ++i)
        y[i] = 1.0 + 0.3 * x(i, 1) - 0.2 * x(i, 2) + 0.1 * std::sin(3.0 * i);
    const LinearModel model(x, y, 1.0);

    const MatrixXd g = x.transpose() * x;
    const MatrixXd ginv = g.inverse();
    const VectorXd bh = ginv * x.transpose() * y;
    double rss = 0.0;
    for (int i = 0; i < 15; ++i) {
        double fit = 0.0;
        for (int j = 0; j < 3; ++j)
            fit += x(i, j) * bh[j];
        rss += (y[i] - fit) * (y[i] - fit);
    }
    const double s2 = rss / 12.0;
    double tr_ginv = 0.0, tr_dinv = 0.0;
    for (int j = 0; j < 3; ++j) {
        tr_ginv += ginv(j, j);
        tr_dinv += 1.0 / g(j, j);
    }
    const double want = s2 * tr_ginv - s2 * tr_dinv;

    const VectorXd dinv = g.diagonal().cwiseInverse();
    const MatrixXd sigma_hat = s2 * MatrixXd(dinv.asDiagonal());
    EXPECT_NEAR(spsl_c_hat(model, sigma_hat), want, 1e-10 * std::abs(want));

    const EstimatorBench bench(x, DiagCompetitor{});
    EXPECT_NEAR(bench.a_hat(y, bh), want, 1e-10 * std::abs(want));

    const VectorXd bt = dinv.asDiagonal() * (x.transpose() * y);
    const VectorXd d = bh - bt;
    const VectorXd spsl = bh - want * d / d.squaredNorm();
    const auto est = bench.evaluate(y, {EstimatorSpec::least_squares(), EstimatorSpec::spsl()});
    EXPECT_LT((est[0] - bh).norm(), 1e-10);
    EXPECT_LT((est[1] - spsl).norm(), 1e-9);
}

TEST(SpslIntensity, RestrictedCompetitorUsesProjectedCovariance)
{
    const MatrixXd x = generate_design(25, 4, 0.6, 19);
    VectorXd y(25);
    for (int i = 0; i < 25; ++i)
        y[i] = 0.5 + x(i, 1) - 0.4 * x(i, 3) + 0.2 * std::cos(1.3 * i);
    const auto restriction = LinearRestriction::trailing(4, 3, VectorXd::Zero(3));
    const EstimatorBench bench(x, restriction);
    const DesignFactors design(x);
    const RestrictionFactors rf(design, restriction);
    const VectorXd bh = design.ols(y);
    const double s2 = design.residual_variance(y, bh);
    const MatrixXd sigma_hat = s2 * (design.gram_inverse() - rf.j() * restriction.matrix() * design.gram_inverse());
    EXPECT_NEAR(bench.a_hat(y, bh), spsl_c_hat(LinearModel(x, y, 1.0), sigma_hat), 1e-12);
}

TEST(OptimalC, RatioAndInterval)
{
    EXPECT_DOUBLE_EQ(optimal_c(0.5, 0.5), 1.0);
    EXPECT_THROW(optimal_c(0.5, 0.0), MomentError);
    const auto [lo, hi] = dominance_interval(1.0);
    EXPECT_EQ(lo, 0.0);
    EXPECT_EQ(hi, 2.0);
    const auto [nlo, nhi] = dominance_interval(-0.25);
    EXPECT_EQ(nlo, -0.5);
    EXPECT_EQ(nhi, 0.0);
}

TEST(Combine, ScaleEquivariance)
{
    // Shifting both estimates and scaling leaves the shrinkage direction intact.
    const VectorXd bh = Eigen::Vector4d(1.0, -2.0, 0.3, 4.0);
    const VectorXd bt = Eigen::Vector4d(0.0, 1.0, 0.3, 2.0);
    const auto spec = ShrinkageSpec::toward(HFunction::inverse_sq_norm(), 0.7);
    const VectorXd base = combine({bh, bt}, spec).estimate;
    const double s = 3.0;
    const auto scaled_spec = ShrinkageSpec::toward(HFunction::inverse_sq_norm(), 0.7 * s * s);
    const VectorXd shifted = VectorXd::Constant(4, 5.0);
    const VectorXd scaled = combine({s * bh + shifted, s * bt + shifted}, scaled_spec).estimate;
    EXPECT_LT((scaled - (s * base + shifted)).norm(), 1e-12);
}

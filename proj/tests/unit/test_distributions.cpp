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

#include <boost/math/distributions/normal.hpp>

#include "steinrule/distributions.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/simulation.hpp"
#include "steinrule/verification.hpp"

using namespace steinrule;

namespace {

/// Two-sided per-entry z threshold giving a family-wise 3-sigma level over `m` entries.
double familywise_z(int m)
{
    const boost::math::normal n;
    const double p = 2.0 * boost::math::cdf(boost::math::complement(n, 3.0));
    return boost::math::quantile(boost::math::complement(n, p / (2.0 * m)));
}

/// Checks the distinct entries of the sample covariance and the mean of rows of
/// [u1 u2] against `want`, at a family-wise 3-sigma level.
void expect_covariance(const JointDraws& d, const MatrixXd& want, const VectorXd& mean_want)
{
    const Eigen::Index k = d.u1.cols();
    const double z = familywise_z(static_cast<int>(k * (2 * k + 1) + 2 * k));
    MatrixXd v(d.u1.rows(), 2 * k);
    v << d.u1, d.u2;
    const double n = static_cast<double>(v.rows());
    const VectorXd mean = v.colwise().mean();
    const MatrixXd c = v.rowwise() - mean.transpose();
    for (Eigen::Index a = 0; a < 2 * k; ++a) {
        for (Eigen::Index b = a; b < 2 * k; ++b) {
            const VectorXd prod = c.col(a).cwiseProduct(c.col(b));
            const double cov = prod.mean();
            const double se = std::sqrt((prod.array() - cov).square().mean() / n);
            EXPECT_LE(std::abs(cov - want(a, b)), z * se + 1e-12) << a << "," << b;
        }
        const double se = std::sqrt(c.col(a).squaredNorm() / n / n);
        EXPECT_LE(std::abs(mean[a] - mean_want[a]), z * se) << a;
    }
}

}  // namespace

TEST(Rng, CounterStreamsAreReproducibleAndDistinct)
{
    CounterRng a(1, 2, 3), b(1, 2, 3), c(1, 2, 4);
    for (int i = 0; i < 10; ++i) {
        const auto x = a();
        EXPECT_EQ(x, b());
        EXPECT_NE(x, c());
    }
}

TEST(Rng, StandardNormalMoments)
{
    const auto est = monte_carlo_means<2>(400000, [](std::size_t i) {
        CounterRng rng(77, i);
        const double z = standard_normal(rng);
        return std::array<double, 2>{z, z * z};
    });
    EXPECT_LE(std::abs(est.mean[0]), 3.0 * est.se(0));
    EXPECT_LE(std::abs(est.mean[1] - 1.0), 3.0 * est.se(1));
}

TEST(MonteCarloMeans, IndependentOfChunking)
{
    auto stat = [](std::size_t i) { return std::array<double, 1>{std::sin(double(i))}; };
    const auto a = monte_carlo_means<1>(10000, stat);
    const auto b = monte_carlo_means<1>(10000, stat);
    EXPECT_EQ(a.mean[0], b.mean[0]);
    double direct = 0.0;
    for (std::size_t i = 0; i < 10000; ++i)
        direct += std::sin(double(i));
    EXPECT_NEAR(a.mean[0], direct / 10000.0, 1e-15);
}

TEST(JointSampler, GaussianIdentityCovariance)
{
    const auto m = identity_instance(3);
    const auto d = sample_joint_gaussian(m, 200000, 5);
    expect_covariance(d, m.block_covariance(), VectorXd::Zero(6));
}

TEST(JointSampler, GaussianCorrelatedDiagMoments)
{
    const auto m = correlated_diag_instance(3, 99);
    const auto d = sample_joint_gaussian(m, 200000, 6);
    VectorXd mean(6);
    mean << VectorXd::Zero(3), m.gamma;
    expect_covariance(d, m.block_covariance(), mean);
}

TEST(JointSampler, GammaMixtureInflatesCovariance)
{
    const auto spec = EllipticalSpec::gamma(5.0);
    EXPECT_NEAR(spec.inverse_mean(), 5.0 / 3.0, 1e-15);
    const auto m = identity_instance(3);
    // Fourth moments are finite for nu = 5, so the SE estimate is meaningful.
    const auto d = sample_joint_elliptical(m, spec, 400000, 7);
    expect_covariance(d, spec.inverse_mean() * m.block_covariance(), VectorXd::Zero(6));
}

TEST(EllipticalSpec, TwoPointMoments)
{
    const auto s = EllipticalSpec::two_point(0.5, 2.0, 0.25);
    EXPECT_DOUBLE_EQ(s.first_abs_moment(), 0.25 * 0.5 + 0.75 * 2.0);
    EXPECT_DOUBLE_EQ(s.inverse_mean(), 0.25 / 0.5 + 0.75 / 2.0);
    EXPECT_THROW(EllipticalSpec::two_point(0.5, 2.0, 1.0), ConfigError);
    EXPECT_THROW(EllipticalSpec::gamma(2.0), ConfigError);
}

TEST(JointSampler, DrawsDependOnSeedAndIndexOnly)
{
    const auto m = correlated_diag_instance(4, 3);
    const auto a = sample_joint_gaussian(m, 5000, 11);
    const auto b = sample_joint_gaussian(m, 6000, 11);
    EXPECT_EQ(a.u1, b.u1.topRows(5000));
    EXPECT_EQ(a.u2, b.u2.topRows(5000));
}

TEST(SingularSampler, DifferenceHasRankQAndConstraintHolds)
{
    const MatrixXd x = generate_design(25, 4, 0.6, 13);
    const LinearModel model(x, VectorXd::Zero(25), 0.5);
    const VectorXd beta = make_beta(4, 4.8);
    const MatrixXd rm = MatrixXd::Identity(4, 4).bottomRows(3);
    const LinearRestriction restriction(rm, rm * beta);
    const auto d = sample_joint_singular(model, restriction, beta, 0.5, 20000, 17);
    const MatrixXd diff = d.u1 - d.u2;
    const MatrixXd c = diff.rowwise() - diff.colwise().mean();
    const MatrixXd cov = c.transpose() * c / 20000.0;
    const auto eig = SymmetricEigen(cov);
    EXPECT_EQ(eig.rank(), 3);
    for (Eigen::Index i = 0; i < 100; ++i)
        EXPECT_LT((rm * (d.u2.row(i).transpose() + beta) - rm * beta).cwiseAbs().maxCoeff(), 1e-8);

    const auto m = joint_moments_restricted(model, restriction, beta);
    const MatrixXd xi_rel = (cov - m.xi).cwiseAbs() / m.xi.cwiseAbs().maxCoeff();
    EXPECT_LT(xi_rel.maxCoeff(), 0.05);
}

TEST(InverseChiSquare, CentralValueIsExact)
{
    for (int k = 3; k <= 12; ++k)
        EXPECT_EQ(inv_chisq_mean(k, 0.0), 1.0 / (k - 2));
    EXPECT_THROW(inv_chisq_mean(2, 1.0), DivergentMomentError);
    EXPECT_THROW(inv_chisq_mean(5, -1.0), ConfigError);
}

TEST(InverseChiSquare, SeriesMatchesMonteCarlo)
{
    for (const auto& [k, lambda] : std::vector<std::pair<int, double>>{{3, 2.0}, {5, 5.0}}) {
        const double mu = std::sqrt(lambda);
        const auto est = monte_carlo_means<1>(2000000, [&](std::size_t i) {
            CounterRng rng(123 + k, i);
            double s = 0.0;
            for (int j = 0; j < k; ++j) {
                const double z = standard_normal(rng) + (j == 0 ? mu : 0.0);
                s += z * z;
            }
            return std::array<double, 1>{1.0 / s};
        });
        const double v = inv_chisq_mean(k, lambda);
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0 / (k - 2));
        EXPECT_LE(std::abs(v - est.mean[0]), 3.0 * est.se(0)) << "k=" << k << " lambda=" << lambda;
    }
}

TEST(InverseChiSquare, LargeNoncentralityBehavesLikeReciprocalMean)
{
    const double v = inv_chisq_mean(4, 2000.0);
    EXPECT_NEAR(v * 2002.0, 1.0, 2e-3);
    EXPECT_LT(inv_chisq_mean(4, 10.0), inv_chisq_mean(4, 1.0));
}

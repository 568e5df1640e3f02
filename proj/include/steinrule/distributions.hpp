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

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "steinrule/errors.hpp"
#include "steinrule/linalg.hpp"
#include "steinrule/model.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/rng.hpp"

namespace steinrule {

enum class MixingKind { DiracAtOne, GammaMixture, TwoPointMixture };

/// Scale-mixture weighting: a draw is N(mean, z^-1 * Cov) with z ~ kappa.
struct EllipticalSpec {
    MixingKind kind = MixingKind::DiracAtOne;
    double nu = 0.0;
    double z1 = 1.0;
    double z2 = 1.0;
    double w = 1.0;

    static EllipticalSpec dirac() { return {}; }

    /// z ~ Gamma(shape nu/2, rate nu/2): multivariate t with nu degrees of freedom.
    static EllipticalSpec gamma(double nu)
    {
        if (!(nu > 2.0) || !std::isfinite(nu))
            throw ConfigError("gamma mixture needs nu > 2");
        EllipticalSpec s;
        s.kind = MixingKind::GammaMixture;
        s.nu = nu;
        return s;
    }

    /// z = z1 with probability w, z2 otherwise.
    static EllipticalSpec two_point(double z1, double z2, double w)
    {
        if (!(z1 > 0.0) || !(z2 > 0.0) || !(w > 0.0 && w < 1.0))
            throw ConfigError("two-point mixture needs z1, z2 > 0 and w in (0, 1)");
        EllipticalSpec s;
        s.kind = MixingKind::TwoPointMixture;
        s.z1 = z1;
        s.z2 = z2;
        s.w = w;
        return s;
    }

    /// Integral of t |kappa(t)| dt, i.e. E[z].
    double first_abs_moment() const
    {
        switch (kind) {
        case MixingKind::DiracAtOne: return 1.0;
        case MixingKind::GammaMixture: return 1.0;
        case MixingKind::TwoPointMixture: return w * z1 + (1.0 - w) * z2;
        }
        return 0.0;
    }

    /// E[1/z]: the factor multiplying the block covariance.
    double inverse_mean() const
    {
        switch (kind) {
        case MixingKind::DiracAtOne: return 1.0;
        case MixingKind::GammaMixture: return nu / (nu - 2.0);
        case MixingKind::TwoPointMixture: return w / z1 + (1.0 - w) / z2;
        }
        return 0.0;
    }

    double draw_z(CounterRng& rng) const
    {
        switch (kind) {
        case MixingKind::DiracAtOne: return 1.0;
        case MixingKind::GammaMixture:
            return std::gamma_distribution<double>(0.5 * nu, 2.0 / nu)(rng);
        case MixingKind::TwoPointMixture: return uniform01(rng) < w ? z1 : z2;
        }
        return 1.0;
    }

    std::string name() const
    {
        switch (kind) {
        case MixingKind::DiracAtOne: return "gaussian";
        case MixingKind::GammaMixture: return "t" + std::to_string(static_cast<int>(nu));
        case MixingKind::TwoPointMixture: return "two-point";
        }
        return "?";
    }
};

/// Rows are draws: u1.row(i) = beta_hat - beta, u2.row(i) = beta_tilde - beta.
struct JointDraws {
    MatrixXd u1;
    MatrixXd u2;
};

/// Draws (U1, U2) ~ scale mixture of N((0, gamma), [[A, Sigma], [Sigma', Phi]]).
/// Draw i is a function of (seed, i) only.
class JointSampler {
public:
    explicit JointSampler(const JointMoments& m, EllipticalSpec spec = EllipticalSpec::dirac())
        : spec_(spec), k_(m.k())
    {
        factor_ = psd_factor(m.block_covariance(), "joint covariance of (U1, U2)");
        mean_ = VectorXd::Zero(2 * k_);
        mean_.tail(k_) = m.gamma;
    }

    Eigen::Index k() const noexcept { return k_; }
    const EllipticalSpec& spec() const noexcept { return spec_; }

    void draw(std::uint64_t seed, std::uint64_t index, VectorXd& u1, VectorXd& u2) const
    {
        CounterRng rng(seed, index);
        const double z = spec_.draw_z(rng);
        VectorXd e(factor_.cols());
        fill_standard_normal(rng, e);
        const VectorXd u = mean_ + (factor_ * e) / std::sqrt(z);
        u1 = u.head(k_);
        u2 = u.tail(k_);
    }

private:
    EllipticalSpec spec_;
    Eigen::Index k_;
    MatrixXd factor_;
    VectorXd mean_;
};

inline JointDraws sample_with(const JointSampler& sampler, std::size_t count, std::uint64_t seed)
{
    const Eigen::Index k = sampler.k();
    JointDraws out{MatrixXd(count, k), MatrixXd(count, k)};
    struct Pair {
        VectorXd u1, u2;
    };
    const auto rows = parallel_map<Pair>(count, [&](std::size_t i) {
        Pair p;
        sampler.draw(seed, i, p.u1, p.u2);
        return p;
    });
    for (std::size_t i = 0; i < count; ++i) {
        out.u1.row(static_cast<Eigen::Index>(i)) = rows[i].u1.transpose();
        out.u2.row(static_cast<Eigen::Index>(i)) = rows[i].u2.transpose();
    }
    return out;
}

inline JointDraws sample_joint_gaussian(const JointMoments& m, std::size_t count, std::uint64_t seed)
{
    return sample_with(JointSampler(m), count, seed);
}

inline JointDraws sample_joint_elliptical(const JointMoments& m, const EllipticalSpec& spec,
                                          std::size_t count, std::uint64_t seed)
{
    return sample_with(JointSampler(m, spec), count, seed);
}

/// Regression-level draws of (OLS - beta, restricted LS - beta) under
/// eps ~ N(0, sigma^2 I_n). The covariance of the difference has rank q.
inline JointDraws sample_joint_singular(const LinearModel& model, const LinearRestriction& restriction,
                                        const VectorXd& beta_true, double sigma, std::size_t count,
                                        std::uint64_t seed)
{
    const DesignFactors design(model.design());
    const RestrictionFactors rf(design, restriction);
    if (beta_true.size() != design.k())
        throw ConfigError("beta has wrong length");
    const VectorXd mean_y = design.design() * beta_true;
    const Eigen::Index k = design.k();
    JointDraws out{MatrixXd(count, k), MatrixXd(count, k)};
    struct Pair {
        VectorXd u1, u2;
    };
    const auto rows = parallel_map<Pair>(count, [&](std::size_t i) {
        CounterRng rng(seed, i);
        VectorXd eps(design.n());
        fill_standard_normal(rng, eps);
        const VectorXd beta_hat = design.ols(mean_y + sigma * eps);
        return Pair{beta_hat - beta_true, rf.apply(beta_hat) - beta_true};
    });
    for (std::size_t i = 0; i < count; ++i) {
        out.u1.row(static_cast<Eigen::Index>(i)) = rows[i].u1.transpose();
        out.u2.row(static_cast<Eigen::Index>(i)) = rows[i].u2.transpose();
    }
    return out;
}

/// E[1 / chi^2_k(lambda)] from the Poisson mixture
///   sum_j e^{-lambda/2} (lambda/2)^j / j! * 1 / (k + 2j - 2),
/// truncated once the remaining Poisson mass times the next term is below 1e-12.
inline double inv_chisq_mean(int k, double lambda)
{
    if (k <= 2)
        throw DivergentMomentError("E[1/chi^2_k] diverges for k <= 2 (k = " + std::to_string(k) + ")");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw ConfigError("noncentrality must be finite and >= 0");
    if (lambda == 0.0)
        return 1.0 / (k - 2);

    const double half = 0.5 * lambda;
    // Sum outward from the Poisson mode so large lambda does not underflow.
    const long mode = static_cast<long>(std::floor(half));
    auto log_weight = [&](long j) {
        return -half + static_cast<double>(j) * std::log(half) - std::lgamma(static_cast<double>(j) + 1.0);
    };
    auto term = [&](long j, double weight) { return weight / (k + 2.0 * static_cast<double>(j) - 2.0); };

    double sum = 0.0;
    double mass = 0.0;
    const double w_mode = std::exp(log_weight(mode));
    sum += term(mode, w_mode);
    mass += w_mode;

    double w = w_mode;
    for (long j = mode - 1; j >= 0; --j) {
        w *= static_cast<double>(j + 1) / half;
        sum += term(j, w);
        mass += w;
        if (w < 1e-300)
            break;
    }
    w = w_mode;
    for (long j = mode + 1;; ++j) {
        w *= half / static_cast<double>(j);
        sum += term(j, w);
        mass += w;
        const double tail = std::max(0.0, 1.0 - mass);
        if (tail / (k + 2.0 * static_cast<double>(j)) < 1e-12 || w < 1e-300)
            break;
    }
    return sum;
}

}  // namespace steinrule

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
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "steinrule/errors.hpp"
#include "steinrule/linalg.hpp"

namespace steinrule {

/// Regression instance y = X beta + eps with noise scale sigma.
///
/// The constructor checks shapes and sigma; column rank is enforced by the
/// estimators that need it, so a rank-deficient design can still be built
/// and reported on.
class LinearModel {
public:
    LinearModel(MatrixXd x, VectorXd y, double sigma)
        : x_(std::move(x)), y_(std::move(y)), sigma_(sigma)
    {
        if (x_.cols() < 1)
            throw ConfigError("design matrix needs at least one column");
        if (x_.rows() <= x_.cols())
            throw ConfigError("design matrix needs n > k (n = " + std::to_string(x_.rows()) +
                              ", k = " + std::to_string(x_.cols()) + ")");
        if (y_.size() != x_.rows())
            throw ConfigError("response length does not match design rows");
        if (!(sigma_ > 0.0) || !std::isfinite(sigma_))
            throw ConfigError("sigma must be positive and finite");
        if (!x_.allFinite() || !y_.allFinite())
            throw ConfigError("design and response must be finite");
    }

    const MatrixXd& design() const noexcept { return x_; }
    const VectorXd& response() const noexcept { return y_; }
    double sigma() const noexcept { return sigma_; }
    Eigen::Index n() const noexcept { return x_.rows(); }
    Eigen::Index k() const noexcept { return x_.cols(); }

    LinearModel with_response(VectorXd y) const { return {x_, std::move(y), sigma_}; }
    LinearModel with_sigma(double sigma) const { return {x_, y_, sigma}; }

private:
    MatrixXd x_;
    VectorXd y_;
    double sigma_;
};

struct EstimatePair {
    VectorXd beta_hat;
    VectorXd beta_tilde;
};

/// Linear restriction R beta = r with R of full row rank q.
class LinearRestriction {
public:
    LinearRestriction(MatrixXd rmat, VectorXd r) : rmat_(std::move(rmat)), r_(std::move(r))
    {
        if (rmat_.rows() < 1)
            throw RestrictionError("restriction has no rows");
        if (r_.size() != rmat_.rows())
            throw RestrictionError("restriction right-hand side has wrong length");
        if (rmat_.rows() > rmat_.cols())
            throw RestrictionError("restriction has more rows than coefficients");
        const int rank = column_rank(rmat_.transpose());
        if (rank < rmat_.rows())
            throw RestrictionError("restriction matrix is not of full row rank (rank " +
                                   std::to_string(rank) + " of " +
                                   std::to_string(rmat_.rows()) + ")");
    }

    /// Restriction that fixes the last q coefficients: [0 | I_q] beta = r.
    static LinearRestriction trailing(Eigen::Index k, Eigen::Index q, VectorXd r)
    {
        if (q < 1 || q > k)
            throw RestrictionError("trailing restriction needs 1 <= q <= k");
        MatrixXd rmat = MatrixXd::Zero(q, k);
        rmat.rightCols(q).setIdentity();
        return {std::move(rmat), std::move(r)};
    }

    const MatrixXd& matrix() const noexcept { return rmat_; }
    const VectorXd& rhs() const noexcept { return r_; }
    Eigen::Index q() const noexcept { return rmat_.rows(); }
    Eigen::Index k() const noexcept { return rmat_.cols(); }

    LinearRestriction with_rhs(VectorXd r) const { return {rmat_, std::move(r)}; }

private:
    MatrixXd rmat_;
    VectorXd r_;
};

/// Design quantities shared by every fit on the same X.
class DesignFactors {
public:
    explicit DesignFactors(const MatrixXd& x) : x_(x)
    {
        const Eigen::Index k = x.cols();
        const int rank = column_rank(x);
        if (rank < k)
            throw SingularMatrixError("design matrix is rank deficient", rank, int(k));
        Eigen::ColPivHouseholderQR<MatrixXd> qr(x);
        ols_map_ = qr.solve(MatrixXd::Identity(x.rows(), x.rows()));
        gram_inv_ = symmetrize(ols_map_ * ols_map_.transpose());
        gram_ = x.transpose() * x;
        gram_diag_ = gram_.diagonal();
    }

    const MatrixXd& design() const noexcept { return x_; }
    const MatrixXd& gram() const noexcept { return gram_; }
    const MatrixXd& gram_inverse() const noexcept { return gram_inv_; }
    const VectorXd& gram_diagonal() const noexcept { return gram_diag_; }
    /// (X'X)^-1 X', k x n.
    const MatrixXd& ols_map() const noexcept { return ols_map_; }
    Eigen::Index n() const noexcept { return x_.rows(); }
    Eigen::Index k() const noexcept { return x_.cols(); }

    VectorXd ols(const VectorXd& y) const { return ols_map_ * y; }

    VectorXd diag_competitor(const VectorXd& y) const
    {
        return (x_.transpose() * y).cwiseQuotient(gram_diag_);
    }

    /// S^2 = ||y - X beta_hat||^2 / (n - k).
    double residual_variance(const VectorXd& y, const VectorXd& beta_hat) const
    {
        return (y - x_ * beta_hat).squaredNorm() / static_cast<double>(n() - k());
    }

private:
    MatrixXd x_;
    MatrixXd ols_map_;
    MatrixXd gram_;
    MatrixXd gram_inv_;
    VectorXd gram_diag_;
};

/// J = (X'X)^-1 R' [R (X'X)^-1 R']^-1 for a fixed design and restriction.
class RestrictionFactors {
public:
    RestrictionFactors(const DesignFactors& design, const LinearRestriction& restriction)
        : rmat_(restriction.matrix()), r_(restriction.rhs())
    {
        if (restriction.k() != design.k())
            throw RestrictionError("restriction width does not match the design");
        const MatrixXd middle = rmat_ * design.gram_inverse() * rmat_.transpose();
        const int rank = numerical_rank(middle);
        if (rank < middle.rows())
            throw RestrictionError("R (X'X)^-1 R' is singular (rank " + std::to_string(rank) +
                                   " of " + std::to_string(middle.rows()) + ")");
        j_ = design.gram_inverse() * rmat_.transpose() * spd_inverse(middle, "R (X'X)^-1 R'");
    }

    const MatrixXd& j() const noexcept { return j_; }
    const MatrixXd& matrix() const noexcept { return rmat_; }
    const VectorXd& rhs() const noexcept { return r_; }
    Eigen::Index q() const noexcept { return rmat_.rows(); }

    /// beta_hat - J (R beta_hat - r); satisfies R beta = r.
    VectorXd apply(const VectorXd& beta_hat) const { return beta_hat - j_ * (rmat_ * beta_hat - r_); }

    /// J R (X'X)^-1, symmetrized; the restricted-minus-base covariance per unit sigma^2.
    MatrixXd projected_covariance(const DesignFactors& design) const
    {
        return symmetrize(j_ * rmat_ * design.gram_inverse());
    }

private:
    MatrixXd rmat_;
    VectorXd r_;
    MatrixXd j_;
};

/// Least squares (X'X)^-1 X'y. Throws SingularMatrixError for rank-deficient X.
inline VectorXd fit_ols(const LinearModel& model)
{
    return DesignFactors(model.design()).ols(model.response());
}

/// Diagonal competitor diag(X'X)^-1 X'y.
inline VectorXd fit_diag_competitor(const LinearModel& model)
{
    const MatrixXd& x = model.design();
    VectorXd out(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double d = x.col(j).squaredNorm();
        if (!(d > 0.0))
            throw DegenerateColumnError("design column has zero sum of squares", int(j) + 1);
        out[j] = x.col(j).dot(model.response()) / d;
    }
    return out;
}

/// Restricted least squares; the result satisfies R beta = r.
inline VectorXd fit_restricted(const LinearModel& model, const LinearRestriction& restriction)
{
    const DesignFactors design(model.design());
    return RestrictionFactors(design, restriction).apply(design.ols(model.response()));
}

/// Second-moment structure of (beta_hat - beta, beta_tilde - beta).
///
/// Xi = A - Sigma - Sigma' + Phi is factored as P P'. When Xi is nonsingular P
/// is its lower Cholesky factor (q = k); otherwise P = V_q diag(l_q)^(1/2) from
/// the eigenvectors with eigenvalues above the rank cutoff, and q < k.
struct JointMoments {
    VectorXd gamma;
    MatrixXd a;
    MatrixXd sigma;
    MatrixXd phi;
    MatrixXd xi;
    MatrixXd p;       // k x q
    MatrixXd r;       // q x q, P'P
    MatrixXd p_pinv;  // q x k, (P'P)^-1 P'
    VectorXd mu;      // -P^+ gamma
    int q = 0;
    double psi0 = 0.0;
    double psi1 = 0.0;

    Eigen::Index k() const noexcept { return a.rows(); }

    static JointMoments from_blocks(MatrixXd a, MatrixXd sigma, MatrixXd phi, VectorXd gamma)
    {
        const Eigen::Index k = a.rows();
        if (a.cols() != k || sigma.rows() != k || sigma.cols() != k || phi.rows() != k ||
            phi.cols() != k || gamma.size() != k)
            throw MomentError("joint moment blocks have inconsistent shapes");

        JointMoments m;
        m.a = symmetrize(a);
        m.sigma = std::move(sigma);
        m.phi = symmetrize(phi);
        m.gamma = std::move(gamma);
        m.xi = symmetrize(m.a - m.sigma - m.sigma.transpose() + m.phi);

        const SymmetricEigen eig(m.xi);
        m.q = eig.rank();
        if (m.q < 1)
            throw MomentError("covariance of beta_hat - beta_tilde is zero");
        if (m.q == k) {
            Eigen::LLT<MatrixXd> llt(m.xi);
            if (llt.info() == Eigen::Success)
                m.p = llt.matrixL();
            else
                m.p = psd_factor(m.xi, "Xi");
        } else {
            m.p = psd_factor(m.xi, "Xi");
        }
        m.q = static_cast<int>(m.p.cols());
        m.r = m.p.transpose() * m.p;
        m.p_pinv = spd_inverse(m.r, "P'P") * m.p.transpose();
        m.mu = -(m.p_pinv * m.gamma);
        m.psi0 = SymmetricEigen(m.r).values.minCoeff();
        m.psi1 = SymmetricEigen(m.block_b()).max_abs();
        return m;
    }

    /// [[A, Sigma], [Sigma', Phi]].
    MatrixXd block_covariance() const
    {
        const Eigen::Index k = this->k();
        MatrixXd c(2 * k, 2 * k);
        c << a, sigma, sigma.transpose(), phi;
        return symmetrize(c);
    }

    /// F with W'FW = U1' P Z for W = (U1', Z')'.
    MatrixXd block_f() const
    {
        const Eigen::Index k = this->k();
        MatrixXd f = MatrixXd::Zero(k + q, k + q);
        f.bottomLeftCorner(q, k) = p.transpose();
        return f;
    }

    /// B = F + F'.
    MatrixXd block_b() const
    {
        const MatrixXd f = block_f();
        return f + f.transpose();
    }

    /// Z = P^+ (u1 - u2).
    VectorXd factor_coordinates(const VectorXd& difference) const { return p_pinv * difference; }
};

/// Exact moments of (OLS, diagonal competitor) for the given design and beta.
inline JointMoments joint_moments_diag(const LinearModel& model, const VectorXd& beta_true)
{
    const DesignFactors design(model.design());
    if (beta_true.size() != design.k())
        throw ConfigError("beta has wrong length");
    const double s2 = model.sigma() * model.sigma();
    const VectorXd dinv = design.gram_diagonal().cwiseInverse();
    MatrixXd a = s2 * design.gram_inverse();
    MatrixXd sigma = s2 * MatrixXd(dinv.asDiagonal());
    MatrixXd phi = s2 * dinv.asDiagonal() * design.gram() * dinv.asDiagonal();
    VectorXd gamma = dinv.asDiagonal() * (design.gram() * beta_true) - beta_true;
    return JointMoments::from_blocks(std::move(a), std::move(sigma), std::move(phi),
                                     std::move(gamma));
}

/// Exact moments of (OLS, restricted LS); singular with rank q = rank(R).
inline JointMoments joint_moments_restricted(const LinearModel& model,
                                             const LinearRestriction& restriction,
                                             const VectorXd& beta_true)
{
    const DesignFactors design(model.design());
    const RestrictionFactors rf(design, restriction);
    if (beta_true.size() != design.k())
        throw ConfigError("beta has wrong length");
    const double s2 = model.sigma() * model.sigma();
    const MatrixXd a = s2 * design.gram_inverse();
    const MatrixXd cross = a - s2 * rf.projected_covariance(design);
    VectorXd gamma = -(rf.j() * (rf.matrix() * beta_true - rf.rhs()));
    return JointMoments::from_blocks(a, cross, cross, std::move(gamma));
}

}  // namespace steinrule

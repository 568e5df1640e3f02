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
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "steinrule/errors.hpp"

namespace steinrule {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Relative eigenvalue cutoff below which a symmetric matrix is rank deficient.
inline constexpr double kRankTolerance = 1e-10;

/// Negative eigenvalues down to -kPsdTolerance * trace are treated as rounding.
inline constexpr double kPsdTolerance = 1e-8;

inline MatrixXd symmetrize(const MatrixXd& m)
{
    return 0.5 * (m + m.transpose());
}

/// Eigenvalues (ascending) and eigenvectors of the symmetric part of `m`.
struct SymmetricEigen {
    VectorXd values;
    MatrixXd vectors;

    explicit SymmetricEigen(const MatrixXd& m)
    {
        Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrize(m));
        values = solver.eigenvalues();
        vectors = solver.eigenvectors();
    }

    double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }

    /// Number of eigenvalues above kRankTolerance * largest |eigenvalue|.
    int rank(double rel_tol = kRankTolerance) const
    {
        const double cut = rel_tol * max_abs();
        return static_cast<int>((values.array() > cut).count());
    }
};

inline int numerical_rank(const MatrixXd& symmetric, double rel_tol = kRankTolerance)
{
    return SymmetricEigen(symmetric).rank(rel_tol);
}

/// Column rank of a general matrix from its singular values.
inline int column_rank(const MatrixXd& m, double rel_tol = kRankTolerance)
{
    if (m.size() == 0)
        return 0;
    Eigen::JacobiSVD<MatrixXd> svd(m);
    const VectorXd& s = svd.singularValues();
    const double cut = rel_tol * s.maxCoeff();
    return static_cast<int>((s.array() > cut).count());
}

/// Factor F (m x r) with F F' = S for a PSD matrix, keeping the r eigenvalues
/// above the rank cutoff. Throws MomentError when S is materially indefinite.
inline MatrixXd psd_factor(const MatrixXd& s, const std::string& what = "covariance")
{
    const SymmetricEigen eig(s);
    const double trace = std::max(eig.values.sum(), 0.0);
    if (eig.values.size() && eig.values.minCoeff() < -kPsdTolerance * std::max(trace, 1e-300))
        throw MomentError(what + " is not positive semidefinite (min eigenvalue " +
                          std::to_string(eig.values.minCoeff()) + ")");
    const double cut = kRankTolerance * eig.max_abs();
    const Eigen::Index m = eig.values.size();
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < m; ++i)
        if (eig.values[i] > cut)
            ++r;
    MatrixXd f(m, r);
    Eigen::Index col = 0;
    for (Eigen::Index i = m - 1; i >= 0; --i) {
        if (eig.values[i] > cut) {
            f.col(col++) = eig.vectors.col(i) * std::sqrt(eig.values[i]);
        }
    }
    return f;
}

/// Symmetric square root of an SPD matrix.
inline MatrixXd spd_sqrt(const MatrixXd& s)
{
    const SymmetricEigen eig(s);
    if (eig.values.minCoeff() <= 0.0)
        throw SingularMatrixError("matrix is not positive definite", eig.rank(), int(s.rows()));
    return eig.vectors * eig.values.cwiseSqrt().asDiagonal() * eig.vectors.transpose();
}

/// Inverse of an SPD matrix via Cholesky, with a rank check.
inline MatrixXd spd_inverse(const MatrixXd& s, const std::string& what = "matrix")
{
    const int rank = numerical_rank(s);
    if (rank < s.rows())
        throw SingularMatrixError(what + " is singular", rank, int(s.rows()));
    Eigen::LLT<MatrixXd> llt(symmetrize(s));
    if (llt.info() != Eigen::Success)
        throw SingularMatrixError(what + " is not positive definite", rank, int(s.rows()));
    return llt.solve(MatrixXd::Identity(s.rows(), s.cols()));
}

}  // namespace steinrule

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
#include <cstring>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "steinrule/distributions.hpp"
#include "steinrule/errors.hpp"
#include "steinrule/linalg.hpp"
#include "steinrule/model.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/rng.hpp"
#include "steinrule/shrinkage.hpp"

namespace steinrule {

enum class CompetitorKind { Diag, Restricted };

/// Monte Carlo design: correlated regressors, noise family, competitor and the
/// estimators to compare. `sigma` and `rho` may list several values; every
/// combination with every norm in the grid is one cell.
struct SimConfig {
    int n = 15;
    int k = 3;
    std::vector<double> sigma{0.5};
    std::vector<double> rho{0.6};
    std::vector<double> beta_norms{1.2, 4.8, 10.7, 19.0, 29.7};
    std::vector<double> gamma_norms;
    int replications = 5000;
    std::uint64_t seed = 20240601;
    EllipticalSpec distribution = EllipticalSpec::dirac();
    CompetitorKind competitor = CompetitorKind::Diag;
    /// Restricted competitor: explicit R, or (when empty) [0 | I_q] with q = restriction_rank.
    MatrixXd restriction_matrix;
    int restriction_rank = 0;
    std::vector<EstimatorSpec> estimators{EstimatorSpec::least_squares(), EstimatorSpec::spsl()};

    /// Rank of the restriction that will be used.
    int effective_restriction_rank() const
    {
        if (restriction_matrix.size() > 0)
            return static_cast<int>(restriction_matrix.rows());
        if (restriction_rank > 0)
            return restriction_rank;
        return k >= 4 ? k - 1 : k;
    }

    MatrixXd effective_restriction_matrix() const
    {
        if (restriction_matrix.size() > 0)
            return restriction_matrix;
        const int q = effective_restriction_rank();
        MatrixXd r = MatrixXd::Zero(q, k);
        r.rightCols(q).setIdentity();
        return r;
    }

    void validate() const
    {
        if (k < 2)
            throw ConfigError("k must be >= 2 (intercept plus at least one regressor)");
        if (n <= k)
            throw ConfigError("n must exceed k");
        if (replications < 100)
            throw ConfigError("replications must be >= 100");
        if (sigma.empty() || rho.empty())
            throw ConfigError("sigma and rho need at least one value");
        for (double s : sigma)
            if (!(s > 0.0) || !std::isfinite(s))
                throw ConfigError("sigma values must be positive");
        for (double r : rho) {
            const double lower = k > 3 ? -1.0 / (k - 2) : -1.0;
            if (!(r > lower && r < 1.0))
                throw ConfigError("rho = " + std::to_string(r) +
                                  " makes the regressor correlation matrix indefinite");
        }
        for (double b : beta_norms)
            if (!(b > 0.0))
                throw ConfigError("beta norms must be positive");
        for (double g : gamma_norms)
            if (!(g >= 0.0))
                throw ConfigError("gamma norms must be non-negative");
        if (estimators.empty())
            throw ConfigError("no estimators configured");
        if (competitor == CompetitorKind::Restricted) {
            const MatrixXd r = effective_restriction_matrix();
            if (r.cols() != k || r.rows() < 1 || r.rows() > k)
                throw ConfigError("restriction must have 1..k rows and k columns");
        }
    }
};

struct SweepRow {
    int cell_id = 0;
    int n = 0;
    int k = 0;
    double sigma = 0.0;
    double rho = 0.0;
    double beta_norm = 0.0;
    double gamma_norm = 0.0;
    std::string estimator;
    double rmse = 0.0;
    double rmse_se = 0.0;
    int replications = 0;
    std::uint64_t seed = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Choices the design leaves open (beta direction, design reuse, ...).
    nlohmann::json metadata;

    /// Rows for one estimator, in cell order.
    std::vector<SweepRow> for_estimator(const std::string& name) const
    {
        std::vector<SweepRow> out;
        for (const auto& r : rows)
            if (r.estimator == name)
                out.push_back(r);
        return out;
    }
};

namespace detail {

inline std::uint64_t double_bits(double v)
{
    std::uint64_t b = 0;
    std::memcpy(&b, &v, sizeof b);
    return b;
}

/// Design seed: one design per (seed, n, k, rho), shared by every sigma and norm.
inline std::uint64_t design_seed(std::uint64_t seed, int n, int k, double rho)
{
    std::uint64_t h = mix64(seed ^ 0x5EEDDE5167ULL);
    h = mix64(h ^ static_cast<std::uint64_t>(n));
    h = mix64(h ^ (static_cast<std::uint64_t>(k) << 32));
    return mix64(h ^ double_bits(rho));
}

inline constexpr std::uint64_t kDesignSubstream = 1;
inline constexpr std::uint64_t kNoiseSubstream = 2;

}  // namespace detail

/// n x k design: a column of ones, then k-1 columns drawn row-wise from
/// N(1, equicorrelation(rho)) with unit variances.
inline MatrixXd generate_design(int n, int k, double rho, std::uint64_t seed)
{
    if (k < 2)
        throw ConfigError("design needs k >= 2");
    if (n < 1)
        throw ConfigError("design needs n >= 1");
    const int m = k - 1;
    MatrixXd corr = MatrixXd::Constant(m, m, rho);
    corr.diagonal().setOnes();
    Eigen::LLT<MatrixXd> llt(corr);
    if (llt.info() != Eigen::Success)
        throw ConfigError("equicorrelation matrix with rho = " + std::to_string(rho) +
                          " is not positive definite");
    const MatrixXd l = llt.matrixL();
    MatrixXd x(n, k);
    VectorXd e(m);
    for (int i = 0; i < n; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i), detail::kDesignSubstream);
        fill_standard_normal(rng, e);
        x(i, 0) = 1.0;
        x.row(i).tail(m) = (VectorXd::Ones(m) + l * e).transpose();
    }
    return x;
}

/// beta along the normalized all-ones direction with beta'beta = target.
inline VectorXd make_beta(int k, double target_norm)
{
    if (!(target_norm > 0.0))
        throw ConfigError("target beta norm must be positive");
    return VectorXd::Constant(k, std::sqrt(target_norm / k));
}

namespace detail {

struct CellSpec {
    double sigma;
    double rho;
    VectorXd beta;
    Competitor competitor;
    double gamma_norm;
};

/// Ratio mean(a)/mean(b) of paired samples with its delta-method standard error.
inline std::pair<double, double> ratio_with_se(const std::vector<double>& a, const std::vector<double>& b)
{
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    saa /= n - 1;
    sbb /= n - 1;
    sab /= n - 1;
    const double ratio = ma / mb;
    const double var = (saa - 2.0 * ratio * sab + ratio * ratio * sbb) / (mb * mb * n);
    return {ratio, std::sqrt(std::max(var, 0.0))};
}

/// Runs one cell and appends one row per estimator.
inline void run_cell(const SimConfig& cfg, const MatrixXd& x, const CellSpec& cell, int cell_id,
                     std::vector<SweepRow>& rows)
{
    const EstimatorBench bench(x, cell.competitor);
    const VectorXd mean_y = x * cell.beta;
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    const std::size_t ne = cfg.estimators.size();

    // losses[r] = (||beta_hat - beta||^2, ||est_1 - beta||^2, ...)
    const auto losses = parallel_map<std::vector<double>>(reps, [&](std::size_t r) {
        CounterRng rng(cfg.seed, r, kNoiseSubstream);
        const double z = cfg.distribution.draw_z(rng);
        VectorXd eps(x.rows());
        fill_standard_normal(rng, eps);
        const VectorXd y = mean_y + (cell.sigma / std::sqrt(z)) * eps;
        const auto estimates = bench.evaluate(y, cfg.estimators);
        std::vector<double> out(ne + 1);
        out[0] = (bench.design().ols(y) - cell.beta).squaredNorm();
        for (std::size_t e = 0; e < ne; ++e)
            out[e + 1] = (estimates[e] - cell.beta).squaredNorm();
        return out;
    });

    std::vector<double> base(reps), other(reps);
    for (std::size_t r = 0; r < reps; ++r)
        base[r] = losses[r][0];
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t r = 0; r < reps; ++r)
            other[r] = losses[r][e + 1];
        const auto [rmse, se] = ratio_with_se(other, base);
        SweepRow row;
        row.cell_id = cell_id;
        row.n = cfg.n;
        row.k = cfg.k;
        row.sigma = cell.sigma;
        row.rho = cell.rho;
        row.beta_norm = cell.beta.squaredNorm();
        row.gamma_norm = cell.gamma_norm;
        row.estimator = cfg.estimators[e].name;
        row.rmse = rmse;
        row.rmse_se = se;
        row.replications = cfg.replications;
        row.seed = cfg.seed;
        rows.push_back(std::move(row));
    }
}

inline nlohmann::json sweep_metadata(const SimConfig& cfg, const std::string& sweep)
{
    nlohmann::json meta;
    meta["sweep"] = sweep;
    meta["beta_direction"] = "all-ones, scaled to the target beta'beta";
    meta["design"] = "first column ones; one design per (seed, n, k, rho), fixed across "
                     "replications, sigma values and norm grid";
    meta["noise_streams"] = "keyed by (seed, replication); shared across cells";
    meta["competitor"] = cfg.competitor == CompetitorKind::Diag ? "diag" : "restricted";
    meta["distribution"] = cfg.distribution.name();
    if (cfg.competitor == CompetitorKind::Restricted) {
        meta["restriction_rank"] = cfg.effective_restriction_rank();
        meta["gamma_construction"] = "r = R beta - delta u, u = normalized ones, delta from target";
    }
    return meta;
}

inline double diag_gamma_norm(const DesignFactors& d, const VectorXd& beta)
{
    const VectorXd gamma = d.gram_diagonal().cwiseInverse().asDiagonal() * (d.gram() * beta) - beta;
    return gamma.squaredNorm();
}

}  // namespace detail

/// RMSE of every configured estimator against OLS across the beta'beta grid.
/// For the restricted competitor the restriction holds exactly (r = R beta).
inline SweepResult run_sweep(const SimConfig& cfg)
{
    cfg.validate();
    SweepResult result;
    result.metadata = detail::sweep_metadata(cfg, "beta_norm");
    int cell_id = 0;
    for (double rho : cfg.rho) {
        const MatrixXd x = generate_design(cfg.n, cfg.k, rho, detail::design_seed(cfg.seed, cfg.n, cfg.k, rho));
        const DesignFactors design(x);
        for (double sigma : cfg.sigma) {
            for (double target : cfg.beta_norms) {
                const VectorXd beta = make_beta(cfg.k, target);
                detail::CellSpec cell{sigma, rho, beta, DiagCompetitor{}, 0.0};
                if (cfg.competitor == CompetitorKind::Restricted) {
                    const MatrixXd rm = cfg.effective_restriction_matrix();
                    cell.competitor = LinearRestriction(rm, rm * beta);
                    cell.gamma_norm = 0.0;
                } else {
                    cell.gamma_norm = detail::diag_gamma_norm(design, beta);
                }
                detail::run_cell(cfg, x, cell, cell_id++, result.rows);
            }
        }
    }
    return result;
}

/// RMSE across a grid of bias norms gamma'gamma.
///
/// Diag competitor: gamma = (D^-1 X'X - I) beta is linear in beta, so beta is
/// scaled along the all-ones direction until gamma'gamma hits the target.
/// Restricted competitor: beta = make_beta(k, beta_norms[0]) and the restriction
/// is offset, r = R beta - delta u, with delta chosen so gamma'gamma hits the target.
inline SweepResult gamma_sweep(const SimConfig& cfg, const std::vector<double>& gamma_norms)
{
    cfg.validate();
    if (gamma_norms.empty())
        throw ConfigError("gamma sweep needs at least one gamma norm");
    SweepResult result;
    result.metadata = detail::sweep_metadata(cfg, "gamma_norm");
    int cell_id = 0;
    for (double rho : cfg.rho) {
        const MatrixXd x = generate_design(cfg.n, cfg.k, rho, detail::design_seed(cfg.seed, cfg.n, cfg.k, rho));
        const DesignFactors design(x);
        for (double sigma : cfg.sigma) {
            for (double target : gamma_norms) {
                detail::CellSpec cell{sigma, rho, VectorXd(), DiagCompetitor{}, 0.0};
                if (cfg.competitor == CompetitorKind::Diag) {
                    const VectorXd unit = VectorXd::Constant(cfg.k, 1.0 / std::sqrt(double(cfg.k)));
                    const double per_unit = detail::diag_gamma_norm(design, unit);
                    if (!(per_unit > 0.0))
                        throw ConfigError("diag competitor is unbiased for this design; gamma cannot be set");
                    if (!(target > 0.0))
                        throw ConfigError("diag competitor gamma sweep needs gamma'gamma > 0");
                    cell.beta = unit * std::sqrt(target / per_unit);
                    cell.gamma_norm = detail::diag_gamma_norm(design, cell.beta);
                } else {
                    cell.beta = make_beta(cfg.k, cfg.beta_norms.front());
                    const MatrixXd rm = cfg.effective_restriction_matrix();
                    const LinearRestriction exact(rm, rm * cell.beta);
                    const RestrictionFactors rf(design, exact);
                    const VectorXd u = VectorXd::Constant(rm.rows(), 1.0 / std::sqrt(double(rm.rows())));
                    const double ju = (rf.j() * u).norm();
                    const double delta = std::sqrt(target) / ju;
                    const LinearRestriction offset(rm, rm * cell.beta - delta * u);
                    const RestrictionFactors rf2(design, offset);
                    const VectorXd gamma = -(rf2.j() * (rm * cell.beta - offset.rhs()));
                    cell.gamma_norm = gamma.squaredNorm();
                    cell.competitor = offset;
                }
                detail::run_cell(cfg, x, cell, cell_id++, result.rows);
            }
        }
    }
    return result;
}

inline constexpr const char* kSweepCsvHeader =
    "cell_id,n,k,sigma,rho,beta_norm,gamma_norm,estimator,rmse,rmse_se,replications,seed";

inline void write_sweep_csv(const SweepResult& result, std::ostream& os)
{
    os << kSweepCsvHeader << '\n';
    std::ostringstream line;
    for (const auto& r : result.rows) {
        line.str("");
        line.clear();
        line << std::setprecision(10) << r.cell_id << ',' << r.n << ',' << r.k << ',' << r.sigma
             << ',' << r.rho << ',' << r.beta_norm << ',' << r.gamma_norm << ',' << r.estimator
             << ',' << r.rmse << ',' << r.rmse_se << ',' << r.replications << ',' << r.seed;
        os << line.str() << '\n';
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

inline std::vector<double> number_or_list(const nlohmann::json& v, const char* field)
{
    if (v.is_number())
        return {v.get<double>()};
    if (v.is_array()) {
        std::vector<double> out;
        for (const auto& x : v) {
            if (!x.is_number())
                throw ConfigError(std::string("field '") + field + "' must contain numbers");
            out.push_back(x.get<double>());
        }
        return out;
    }
    throw ConfigError(std::string("field '") + field + "' must be a number or a list of numbers");
}

inline EllipticalSpec distribution_from_json(const nlohmann::json& v)
{
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "gaussian" || s == "normal" || s == "dirac")
            return EllipticalSpec::dirac();
        throw ConfigError("unknown distribution '" + s + "'");
    }
    const auto kind = v.value("kind", std::string("gaussian"));
    if (kind == "gaussian" || kind == "normal" || kind == "dirac")
        return EllipticalSpec::dirac();
    if (kind == "gamma" || kind == "t")
        return EllipticalSpec::gamma(v.at("nu").get<double>());
    if (kind == "two_point" || kind == "two-point")
        return EllipticalSpec::two_point(v.at("z1").get<double>(), v.at("z2").get<double>(),
                                         v.at("w").get<double>());
    throw ConfigError("unknown distribution kind '" + kind + "'");
}

inline EstimatorSpec estimator_from_json(const nlohmann::json& v)
{
    EstimatorSpec e;
    e.name = v.at("name").get<std::string>();
    e.h = parse_h(v.value("h", std::string("inverse-sq")));
    const auto c = v.contains("c") ? v.at("c") : nlohmann::json("auto");
    if (c.is_string()) {
        if (c.get<std::string>() != "auto")
            throw ConfigError("estimator c must be a number or \"auto\"");
        e.c.reset();
    } else {
        e.c = c.get<double>();
    }
    return e;
}

}  // namespace detail

/// Parses a config document whose keys mirror SimConfig's fields.
inline SimConfig sim_config_from_json(const nlohmann::json& j)
{
    SimConfig cfg;
    try {
        if (j.contains("n"))
            cfg.n = j.at("n").get<int>();
        if (j.contains("k"))
            cfg.k = j.at("k").get<int>();
        if (j.contains("sigma"))
            cfg.sigma = detail::number_or_list(j.at("sigma"), "sigma");
        if (j.contains("rho"))
            cfg.rho = detail::number_or_list(j.at("rho"), "rho");
        if (j.contains("beta_norms"))
            cfg.beta_norms = detail::number_or_list(j.at("beta_norms"), "beta_norms");
        if (j.contains("gamma_norms"))
            cfg.gamma_norms = detail::number_or_list(j.at("gamma_norms"), "gamma_norms");
        if (j.contains("replications"))
            cfg.replications = j.at("replications").get<int>();
        if (j.contains("seed"))
            cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("distribution"))
            cfg.distribution = detail::distribution_from_json(j.at("distribution"));
        if (j.contains("competitor")) {
            const auto& c = j.at("competitor");
            const std::string kind = c.is_string() ? c.get<std::string>() : c.value("kind", std::string("diag"));
            if (kind == "diag") {
                cfg.competitor = CompetitorKind::Diag;
            } else if (kind == "restricted") {
                cfg.competitor = CompetitorKind::Restricted;
                if (c.is_object() && c.contains("rank"))
                    cfg.restriction_rank = c.at("rank").get<int>();
                if (c.is_object() && c.contains("R")) {
                    const auto& rows = c.at("R");
                    const auto q = static_cast<Eigen::Index>(rows.size());
                    const auto k = q ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
                    cfg.restriction_matrix.resize(q, k);
                    for (Eigen::Index i = 0; i < q; ++i) {
                        if (static_cast<Eigen::Index>(rows.at(i).size()) != k)
                            throw ConfigError("restriction rows have different lengths");
                        for (Eigen::Index jj = 0; jj < k; ++jj)
                            cfg.restriction_matrix(i, jj) = rows.at(i).at(jj).get<double>();
                    }
                }
            } else {
                throw ConfigError("unknown competitor '" + kind + "'");
            }
        }
        if (j.contains("estimators")) {
            cfg.estimators.clear();
            for (const auto& e : j.at("estimators"))
                cfg.estimators.push_back(detail::estimator_from_json(e));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad simulation config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace steinrule

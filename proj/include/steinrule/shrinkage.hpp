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
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "steinrule/errors.hpp"
#include "steinrule/model.hpp"

namespace steinrule {

enum class HKind { InverseSqNorm, SmoothInverse, Zero, One, Custom };

/// Weight h(beta_hat, beta_tilde) of the combined estimator
///   beta_hat + c h(beta_hat, beta_tilde) (beta_hat - beta_tilde).
///
/// q0 bounds ||x - y||^2 |h(x, y)| for every kind except One, where it is
/// infinite.
class HFunction {
public:
    using CustomFn = std::function<double(const VectorXd&, const VectorXd&)>;

    /// h = 1 / ||x - y||^2 (the classical Stein rule weight).
    static HFunction inverse_sq_norm() { return HFunction(HKind::InverseSqNorm, 1.0, true); }

    /// h = 1 / (1 + ||x - y||^p), p >= 2.
    static HFunction smooth_inverse(double p)
    {
        if (!(p >= 2.0) || !std::isfinite(p))
            throw ConfigError("smooth inverse exponent must be >= 2");
        HFunction h(HKind::SmoothInverse, smooth_inverse_bound(p), true);
        h.exponent_ = p;
        return h;
    }

    static HFunction zero() { return HFunction(HKind::Zero, 1.0, true); }

    static HFunction one()
    {
        return HFunction(HKind::One, std::numeric_limits<double>::infinity(), true);
    }

    /// User-supplied weight. `q0` must bound ||x - y||^2 |h(x, y)|.
    static HFunction custom(CustomFn fn, double q0, bool difference_only, std::string name = "custom")
    {
        if (!fn)
            throw ConfigError("custom h needs a callable");
        HFunction h(HKind::Custom, q0, difference_only);
        h.custom_ = std::make_shared<CustomFn>(std::move(fn));
        h.name_ = std::move(name);
        return h;
    }

    /// sup_{z > 0} z^2 / (1 + z^p), by a log-spaced scan and golden-section refinement.
    static double smooth_inverse_bound(double p)
    {
        auto f = [p](double lz) {
            const double z = std::exp(lz);
            return z * z / (1.0 + std::pow(z, p));
        };
        double best_lz = -20.0;
        double best = f(best_lz);
        for (double lz = -20.0; lz <= 40.0; lz += 0.01) {
            const double v = f(lz);
            if (v > best) {
                best = v;
                best_lz = lz;
            }
        }
        // p == 2: increasing in z, supremum is the limit 1 reached at the scan edge
        if (best_lz >= 39.99)
            return best;
        double lo = best_lz - 0.01;
        double hi = best_lz + 0.01;
        const double g = 0.5 * (std::sqrt(5.0) - 1.0);
        for (int it = 0; it < 100; ++it) {
            const double a = hi - g * (hi - lo);
            const double b = lo + g * (hi - lo);
            if (f(a) > f(b))
                hi = b;
            else
                lo = a;
        }
        return std::max(best, f(0.5 * (lo + hi)));
    }

    HKind kind() const noexcept { return kind_; }
    double q0() const noexcept { return q0_; }
    double exponent() const noexcept { return exponent_; }
    bool depends_only_on_difference() const noexcept { return difference_only_; }

    /// True when h is unbounded as beta_hat -> beta_tilde.
    bool singular_at_zero() const noexcept { return kind_ == HKind::InverseSqNorm; }

    std::string name() const
    {
        switch (kind_) {
        case HKind::InverseSqNorm: return "inverse-sq";
        case HKind::SmoothInverse: return "smooth:" + format_exponent();
        case HKind::Zero: return "zero";
        case HKind::One: return "one";
        case HKind::Custom: return name_;
        }
        return "?";
    }

    double operator()(const VectorXd& x, const VectorXd& y) const
    {
        if (kind_ == HKind::Custom)
            return (*custom_)(x, y);
        return of_squared_distance((x - y).squaredNorm());
    }

    /// h as a function of ||x - y||^2, for kinds that depend on the difference only.
    double of_squared_distance(double d2) const
    {
        switch (kind_) {
        case HKind::InverseSqNorm: return 1.0 / d2;
        case HKind::SmoothInverse: return 1.0 / (1.0 + std::pow(d2, 0.5 * exponent_));
        case HKind::Zero: return 0.0;
        case HKind::One: return 1.0;
        case HKind::Custom: break;
        }
        throw ConfigError("custom h cannot be evaluated from a distance alone");
    }

private:
    HFunction(HKind kind, double q0, bool difference_only)
        : kind_(kind), q0_(q0), difference_only_(difference_only)
    {}

    std::string format_exponent() const
    {
        std::string s = std::to_string(exponent_);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.')
            s.pop_back();
        return s;
    }

    HKind kind_;
    double q0_;
    bool difference_only_;
    double exponent_ = 0.0;
    std::shared_ptr<CustomFn> custom_;
    std::string name_;
};

/// One member (h, c) of the class, in the additive orientation
///   beta_hat + c h (beta_hat - beta_tilde).
struct ShrinkageSpec {
    HFunction h = HFunction::zero();
    double c = 0.0;

    /// Member that moves beta_hat toward beta_tilde with intensity `intensity`:
    ///   beta_hat - intensity h (beta_hat - beta_tilde).
    /// This is the orientation in which the risk is trace(A) - 2 c eta + c^2 omega.
    static ShrinkageSpec toward(HFunction h, double intensity) { return {std::move(h), -intensity}; }
};

/// Differences below this norm are treated as beta_hat == beta_tilde.
inline constexpr double kDegenerateDifference = 1e-14;

struct CombineResult {
    VectorXd estimate;
    bool degenerate_difference = false;
};

/// beta_hat + c h(beta_hat, beta_tilde) (beta_hat - beta_tilde).
///
/// If the two estimates coincide and h is singular there, beta_hat is returned
/// with `degenerate_difference` set.
inline CombineResult combine(const EstimatePair& pair, const ShrinkageSpec& spec)
{
    if (pair.beta_hat.size() != pair.beta_tilde.size())
        throw ConfigError("estimate pair has mismatched lengths");
    const VectorXd diff = pair.beta_hat - pair.beta_tilde;
    if (spec.c == 0.0 || spec.h.kind() == HKind::Zero)
        return {pair.beta_hat, false};
    if (spec.h.singular_at_zero() && diff.norm() < kDegenerateDifference)
        return {pair.beta_hat, true};
    const double w = spec.h(pair.beta_hat, pair.beta_tilde);
    return {pair.beta_hat + (spec.c * w) * diff, false};
}

/// a_hat = S^2 trace((X'X)^-1) - trace(Sigma_hat); the data-driven intensity of
/// the semiparametric Stein-like estimator, which is combine() with
/// (InverseSqNorm, c = -a_hat).
inline double spsl_c_hat(const LinearModel& model, const MatrixXd& sigma_hat)
{
    const DesignFactors design(model.design());
    if (sigma_hat.rows() != design.k() || sigma_hat.cols() != design.k())
        throw ConfigError("Sigma_hat has wrong shape");
    const VectorXd beta_hat = design.ols(model.response());
    const double s2 = design.residual_variance(model.response(), beta_hat);
    return s2 * design.gram_inverse().trace() - sigma_hat.trace();
}

/// c* = eta(h) / omega(h).
inline double optimal_c(double eta_h, double omega_h)
{
    if (!(omega_h > 0.0) || !std::isfinite(omega_h))
        throw MomentError("omega(h) must be positive and finite");
    return eta_h / omega_h;
}

/// Open interval of intensities that improve on beta_hat: (min{0, 2c*}, max{0, 2c*}).
inline std::pair<double, double> dominance_interval(double c_star)
{
    return {std::min(0.0, 2.0 * c_star), std::max(0.0, 2.0 * c_star)};
}

/// Competing estimator paired with OLS.
struct DiagCompetitor {};
using Competitor = std::variant<DiagCompetitor, LinearRestriction>;

inline std::string competitor_name(const Competitor& c)
{
    return std::holds_alternative<DiagCompetitor>(c) ? "diag" : "restricted";
}

/// Named estimator. `c` empty means the data-driven SPSL intensity (c = -a_hat).
struct EstimatorSpec {
    std::string name;
    HFunction h = HFunction::zero();
    std::optional<double> c;

    static EstimatorSpec least_squares() { return {"LS", HFunction::zero(), 0.0}; }
    static EstimatorSpec spsl() { return {"SPSL", HFunction::inverse_sq_norm(), std::nullopt}; }
};

/// Everything needed to evaluate EstimatorSpecs on many responses for one design.
class EstimatorBench {
public:
    EstimatorBench(const MatrixXd& x, Competitor competitor)
        : design_(x), competitor_(std::move(competitor))
    {
        if (const auto* restriction = std::get_if<LinearRestriction>(&competitor_)) {
            restriction_.emplace(design_, *restriction);
            sigma_trace_per_s2_ =
                design_.gram_inverse().trace() - restriction_->projected_covariance(design_).trace();
        } else {
            sigma_trace_per_s2_ = design_.gram_diagonal().cwiseInverse().sum();
        }
    }

    const DesignFactors& design() const noexcept { return design_; }
    const Competitor& competitor() const noexcept { return competitor_; }
    const std::optional<RestrictionFactors>& restriction() const noexcept { return restriction_; }

    EstimatePair fit(const VectorXd& y) const
    {
        VectorXd beta_hat = design_.ols(y);
        VectorXd beta_tilde =
            restriction_ ? restriction_->apply(beta_hat) : design_.diag_competitor(y);
        return {std::move(beta_hat), std::move(beta_tilde)};
    }

    /// a_hat with Sigma_hat = S^2 D^-1 (diag) or S^2 [(X'X)^-1 - J R (X'X)^-1] (restricted).
    double a_hat(const VectorXd& y, const VectorXd& beta_hat) const
    {
        const double s2 = design_.residual_variance(y, beta_hat);
        return s2 * (design_.gram_inverse().trace() - sigma_trace_per_s2_);
    }

    /// Evaluates each spec on the response y.
    std::vector<VectorXd> evaluate(const VectorXd& y, const std::vector<EstimatorSpec>& specs) const
    {
        const EstimatePair pair = fit(y);
        std::optional<double> a;
        std::vector<VectorXd> out;
        out.reserve(specs.size());
        for (const EstimatorSpec& s : specs) {
            double c = 0.0;
            if (s.c) {
                c = *s.c;
            } else {
                if (!a)
                    a = a_hat(y, pair.beta_hat);
                c = -*a;
            }
            out.push_back(combine(pair, ShrinkageSpec{s.h, c}).estimate);
        }
        return out;
    }

private:
    DesignFactors design_;
    Competitor competitor_;
    std::optional<RestrictionFactors> restriction_;
    double sigma_trace_per_s2_ = 0.0;
};

/// Parses "zero", "one", "inverse-sq", "smooth:<p>".
inline HFunction parse_h(const std::string& text)
{
    if (text == "zero")
        return HFunction::zero();
    if (text == "one")
        return HFunction::one();
    if (text == "inverse-sq" || text == "inverse_sq" || text == "sr")
        return HFunction::inverse_sq_norm();
    if (text.rfind("smooth", 0) == 0) {
        const auto colon = text.find(':');
        if (colon == std::string::npos)
            return HFunction::smooth_inverse(2.0);
        try {
            return HFunction::smooth_inverse(std::stod(text.substr(colon + 1)));
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad smooth exponent in '" + text + "'");
        }
    }
    throw ConfigError("unknown h kind '" + text + "'");
}

}  // namespace steinrule

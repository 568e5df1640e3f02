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

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "steinrule/distributions.hpp"
#include "steinrule/model.hpp"
#include "steinrule/risk.hpp"
#include "steinrule/shrinkage.hpp"
#include "steinrule/simulation.hpp"

namespace steinrule {

struct NamedInstance {
    std::string name;
    JointMoments moments;
};

/// A = I, Sigma = 0, Phi = I, gamma = 0.
inline JointMoments identity_instance(int k)
{
    const MatrixXd id = MatrixXd::Identity(k, k);
    return JointMoments::from_blocks(id, MatrixXd::Zero(k, k), id, VectorXd::Zero(k));
}

/// Identity blocks with gamma = e1.
inline JointMoments biased_instance(int k)
{
    const MatrixXd id = MatrixXd::Identity(k, k);
    return JointMoments::from_blocks(id, MatrixXd::Zero(k, k), id, VectorXd::Unit(k, 0));
}

/// Diagonal competitor on a correlated design: n = 15, rho = 0.6, sigma = 0.5,
/// ||beta||^2 = 4.8.
inline JointMoments correlated_diag_instance(int k, std::uint64_t seed)
{
    const MatrixXd x = generate_design(15, k, 0.6, seed);
    const LinearModel model(x, VectorXd::Zero(15), 0.5);
    return joint_moments_diag(model, make_beta(k, 4.8));
}

/// Restricted LS with R = [0 | I_q] on a k = q + 1, n = 25 correlated design.
/// Returns the moments and the weight Lambda = A^-1.
inline std::pair<JointMoments, MatrixXd> singular_instance(int q, std::uint64_t seed)
{
    const int k = q + 1;
    const MatrixXd x = generate_design(25, k, 0.6, seed);
    const LinearModel model(x, VectorXd::Zero(25), 0.5);
    const auto restriction = LinearRestriction::trailing(k, q, VectorXd::Zero(q));
    const VectorXd beta = VectorXd::Zero(k);
    JointMoments m = joint_moments_restricted(model, restriction, beta);
    MatrixXd lambda = spd_inverse(m.a, "A");
    return {std::move(m), std::move(lambda)};
}

inline std::vector<NamedInstance> default_instances(int k, std::uint64_t seed)
{
    return {{"identity", identity_instance(k)},
            {"biased", biased_instance(k)},
            {"correlated-diag", correlated_diag_instance(k, seed)}};
}

struct BoundSuiteOptions {
    int k = 3;
    std::size_t samples = 1000000;
    std::uint64_t seed = 20240601;
    double elliptical_nu = 5.0;
    int singular_q = 3;
    std::size_t courant_trials = 10000;
};

/// Every inequality check over the default instance set, plus the singular and
/// Courant checks. Report names carry the instance as a prefix.
inline std::vector<BoundReport> run_bound_suite(const BoundSuiteOptions& opt)
{
    std::vector<BoundReport> out;
    auto add = [&](const std::string& prefix, BoundReport r) {
        r.name = prefix + ": " + r.name;
        out.push_back(std::move(r));
    };
    const std::vector<HFunction> hs{HFunction::inverse_sq_norm(), HFunction::smooth_inverse(2.0)};
    const std::size_t n = opt.samples;
    std::uint64_t stream = 0;
    auto next_seed = [&] { return detail::mix64(opt.seed + detail::kGolden * ++stream); };

    for (const auto& inst : default_instances(opt.k, opt.seed)) {
        const JointMoments& m = inst.moments;
        const JointSampler sampler(m);
        const std::uint64_t s = next_seed();
        for (const auto& h : hs) {
            const RiskMoments mo = estimate_risk_moments(m, h, sampler, n, s);
            const auto [eta, omega] = check_prop_eta_omega(mo, h.q0());
            add(inst.name + " [" + h.name() + "]", eta);
            add(inst.name + " [" + h.name() + "]", omega);
            if (h.kind() == HKind::InverseSqNorm)
                add(inst.name, check_corinterm(m, mo));
        }
        for (double alpha : {0.5, 1.0, 2.0})
            add(inst.name, check_born1(m, sampler, alpha, n, s));
        add(inst.name, check_born2(m, sampler, 1.0, n, s));
        for (const auto& spec : {EllipticalSpec::dirac(), EllipticalSpec::gamma(opt.elliptical_nu)})
            for (auto& r : check_elliptical_omega(m, spec, n, next_seed()))
                add(inst.name, std::move(r));
    }

    if (opt.singular_q > 0) {
        const auto [m, lambda] = singular_instance(opt.singular_q, opt.seed);
        const JointSampler sampler(m);
        for (auto& r : check_singular_omega(m, HFunction::inverse_sq_norm(), lambda, sampler, n,
                                            next_seed()))
            add("singular q=" + std::to_string(opt.singular_q), std::move(r));
    }

    for (int size = 2; size <= 8; ++size) {
        CounterRng rng(opt.seed, 7000 + static_cast<std::uint64_t>(size));
        MatrixXd c(size, size);
        for (Eigen::Index i = 0; i < c.size(); ++i)
            c.data()[i] = standard_normal(rng);
        for (auto& r : check_courant(c, opt.courant_trials, next_seed()))
            add("random", std::move(r));
        const MatrixXd sym = c + c.transpose();
        for (auto& r : check_courant(sym, opt.courant_trials, next_seed()))
            add("symmetric", std::move(r));
    }
    return out;
}

/// True when every applicable report holds.
inline bool all_hold(const std::vector<BoundReport>& reports)
{
    for (const auto& r : reports)
        if (r.applicable && !r.holds)
            return false;
    return true;
}

inline void print_reports(std::ostream& os, const std::vector<BoundReport>& reports)
{
    for (const auto& r : reports) {
        if (!r.applicable) {
            os << "N/A   " << r.name << "  (" << r.note << ")\n";
            continue;
        }
        os << (r.holds ? "PASS  " : "FAIL  ") << r.name << std::setprecision(6)
           << "  lhs=" << r.lhs << " rhs=" << r.rhs << " tol=" << r.tolerance;
        if (!r.note.empty())
            os << "  (" << r.note << ")";
        os << '\n';
    }
}

}  // namespace steinrule

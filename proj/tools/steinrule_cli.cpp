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


// Command-line front end: simulate, analyze, verify-bounds, estimate.
//
// Exit codes: 0 success, 1 bound violation or dominance failure, 2 usage or
// input error.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "steinrule/steinrule.hpp"

namespace {

using namespace steinrule;

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct SimulateArgs {
    std::string config;
    std::string out;
    std::string sweep = "beta";
    bool require_dominance = false;
};

struct DataArgs {
    std::string data;
    std::string response;
    std::vector<std::string> covariates;
};

struct AnalyzeArgs {
    DataArgs data;
    int bootstrap = 5000;
    std::uint64_t seed = 20240601;
    std::string json;
};

struct VerifyArgs {
    int k = 3;
    std::size_t samples = 1000000;
    std::uint64_t seed = 20240601;
    double elliptical = 5.0;
    int singular = 3;
    bool allow_divergent = false;
};

struct EstimateArgs {
    DataArgs data;
    std::string h = "inverse-sq";
    std::string c = "auto";
};

void add_data_options(CLI::App* app, DataArgs& a)
{
    app->add_option("--data", a.data, "CSV file with a header row")->required();
    app->add_option("--response", a.response, "response column")->required();
    app->add_option("--covariates", a.covariates, "covariate columns, in order")
        ->required()
        ->delimiter(',');
}

int run_simulate(const SimulateArgs& a)
{
    std::ifstream in(a.config);
    if (!in)
        throw ParseError("cannot open config '" + a.config + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const SimConfig cfg = sim_config_from_json(j);
    SweepResult res;
    if (a.sweep == "gamma") {
        if (cfg.gamma_norms.empty())
            throw ConfigError("gamma sweep needs \"gamma_norms\" in the config");
        res = gamma_sweep(cfg, cfg.gamma_norms);
    } else {
        res = run_sweep(cfg);
    }

    std::ofstream out(a.out, std::ios::binary);
    if (!out)
        throw ParseError("cannot write '" + a.out + "'");
    write_sweep_csv(res, out);
    out.close();

    nlohmann::json meta = res.metadata;
    meta["config"] = j;
    meta["rows"] = res.rows.size();
    std::ofstream side(a.out + ".meta.json");
    if (!side)
        throw ParseError("cannot write '" + a.out + ".meta.json'");
    side << meta.dump(2) << '\n';

    std::cout << "wrote " << res.rows.size() << " rows to " << a.out << '\n';
    bool dominated = true;
    for (const auto& r : res.rows) {
        if (r.estimator == "LS")
            continue;
        if (!(r.rmse < 1.0)) {
            dominated = false;
            std::cout << "no improvement: " << r.estimator << " sigma=" << r.sigma
                      << " rho=" << r.rho << " beta'beta=" << r.beta_norm << " rmse=" << r.rmse
                      << '\n';
        }
    }
    return a.require_dominance && !dominated ? kViolation : kOk;
}

RegressionData load_regression(const DataArgs& a)
{
    return select_regression(load_csv(a.data), a.response, a.covariates);
}

int run_analyze(const AnalyzeArgs& a)
{
    const Dataset data = load_csv(a.data.data);
    const RegressionData reg = select_regression(data, a.data.response, a.data.covariates);
    std::vector<std::string> cols{a.data.response};
    cols.insert(cols.end(), a.data.covariates.begin(), a.data.covariates.end());
    const CorrelationTable corr = correlation_table(data, cols);
    const auto rep = bootstrap_efficiency(
        reg, {EstimatorSpec::least_squares(), EstimatorSpec::spsl()}, a.bootstrap, a.seed);
    print_report(std::cout, corr, rep);
    if (!a.json.empty()) {
        std::ofstream out(a.json);
        if (!out)
            throw ParseError("cannot write '" + a.json + "'");
        nlohmann::json j = rep.to_json();
        j["correlation"]["names"] = corr.names;
        for (Eigen::Index i = 0; i < corr.r.rows(); ++i) {
            j["correlation"]["r"].push_back(std::vector<double>(corr.r.row(i).begin(), corr.r.row(i).end()));
            j["correlation"]["p"].push_back(std::vector<double>(corr.p.row(i).begin(), corr.p.row(i).end()));
        }
        out << j.dump(2) << '\n';
    }
    return kOk;
}

int run_verify(const VerifyArgs& a)
{
    if (a.k < 3 && !a.allow_divergent) {
        std::cerr << "error: k = " << a.k
                  << " < 3: the inverse moments diverge; pass --allow-divergent to run anyway\n";
        return kUsage;
    }
    if (a.k < 1)
        throw ConfigError("k must be positive");
    if (a.samples < 100)
        throw ConfigError("--samples must be at least 100");
    BoundSuiteOptions opt;
    opt.k = a.k;
    opt.samples = a.samples;
    opt.seed = a.seed;
    opt.elliptical_nu = a.elliptical;
    opt.singular_q = a.singular;
    const auto reports = run_bound_suite(opt);
    print_reports(std::cout, reports);
    const bool ok = all_hold(reports);
    std::cout << (ok ? "all bounds hold" : "bound violation") << " (" << reports.size()
              << " checks, " << a.samples << " draws, seed " << a.seed << ")\n";
    return ok ? kOk : kViolation;
}

int run_estimate(const EstimateArgs& a)
{
    const RegressionData reg = load_regression(a.data);
    EstimatorSpec spec{"estimate", parse_h(a.h), std::nullopt};
    if (a.c != "auto") {
        try {
            std::size_t used = 0;
            spec.c = std::stod(a.c, &used);
            if (used != a.c.size())
                throw std::invalid_argument(a.c);
        } catch (const std::logic_error&) {
            throw ConfigError("--c must be a number or 'auto'");
        }
    }
    const auto pe = point_estimates(reg, {spec});
    const VectorXd& b = pe.estimates.at("estimate");
    const auto names = reg.coefficient_names();
    std::cout << "h = " << spec.h.name() << ", c = ";
    if (spec.c)
        std::cout << *spec.c;
    else
        std::cout << "auto (-a_hat = " << -pe.a_hat << ")";
    std::cout << '\n';
    for (std::size_t i = 0; i < names.size(); ++i)
        std::cout << std::setw(14) << names[i] << std::setw(14) << std::fixed
                  << std::setprecision(6) << b[static_cast<Eigen::Index>(i)] << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Generalized Stein-rule estimators: simulation, bounds and data analysis"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo sweep from a JSON config");
    simulate->add_option("--config", sim.config, "JSON config")->required();
    simulate->add_option("--out", sim.out, "output CSV")->required();
    simulate->add_option("--sweep", sim.sweep, "beta or gamma")
        ->check(CLI::IsMember({"beta", "gamma"}));
    simulate->add_flag("--require-dominance", sim.require_dominance,
                       "exit 1 if any non-LS estimator has RMSE >= 1");

    AnalyzeArgs an;
    auto* analyze = app.add_subcommand("analyze", "correlations, estimates and bootstrap efficiency");
    add_data_options(analyze, an.data);
    analyze->add_option("--bootstrap", an.bootstrap, "bootstrap replications");
    analyze->add_option("--seed", an.seed, "bootstrap seed");
    analyze->add_option("--json", an.json, "also write the report as JSON");

    VerifyArgs ver;
    auto* verify = app.add_subcommand("verify-bounds", "Monte Carlo check of every risk bound");
    verify->add_option("--k", ver.k, "dimension of the default instances");
    verify->add_option("--samples", ver.samples, "draws per check");
    verify->add_option("--seed", ver.seed, "seed");
    verify->add_option("--elliptical", ver.elliptical, "nu of the gamma mixture (> 2)");
    verify->add_option("--singular", ver.singular, "rank q of the singular restriction (0 skips)");
    verify->add_flag("--allow-divergent", ver.allow_divergent, "run even when k < 3");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "one Stein-rule estimate on a data set");
    estimate->set_help_flag("--help", "print this help message and exit");
    add_data_options(estimate, est.data);
    estimate->add_option("--h", est.h, "zero | one | inverse-sq | smooth:<p>");
    estimate->add_option("--c", est.c, "intensity, or 'auto' for -a_hat");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (simulate->parsed())
            return run_simulate(sim);
        if (analyze->parsed())
            return run_analyze(an);
        if (verify->parsed())
            return run_verify(ver);
        if (estimate->parsed())
            return run_estimate(est);
    } catch (const DivergentMomentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const steinrule::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}

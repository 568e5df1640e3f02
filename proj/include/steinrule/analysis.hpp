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
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "steinrule/errors.hpp"
#include "steinrule/model.hpp"
#include "steinrule/parallel.hpp"
#include "steinrule/rng.hpp"
#include "steinrule/shrinkage.hpp"

namespace steinrule {

/// Numeric table read from CSV. Columns whose every cell is non-numeric are kept
/// aside as labels (e.g. a brand name column).
struct Dataset {
    std::vector<std::string> names;
    MatrixXd values;
    std::vector<std::string> label_names;
    std::vector<std::vector<std::string>> labels;

    Eigen::Index rows() const noexcept { return values.rows(); }

    Eigen::Index index_of(const std::string& name) const
    {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
            throw ConfigError("no numeric column named '" + name + "'");
        return static_cast<Eigen::Index>(it - names.begin());
    }

    VectorXd column(const std::string& name) const { return values.col(index_of(name)); }
};

/// Response and intercept-augmented design chosen from a Dataset.
struct RegressionData {
    std::string response;
    std::vector<std::string> covariates;
    MatrixXd x;  // n x (1 + covariates)
    VectorXd y;

    std::vector<std::string> coefficient_names() const
    {
        std::vector<std::string> out{"(Intercept)"};
        out.insert(out.end(), covariates.begin(), covariates.end());
        return out;
    }
};

namespace detail {

inline std::string trim(std::string s)
{
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            cell += ch;
        } else if (ch == ',' && !quoted) {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    out.push_back(trim(cell));
    return out;
}

inline bool parse_number(const std::string& s, double& out)
{
    if (s.empty())
        return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+')
        ++first;
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last && std::isfinite(out);
}

}  // namespace detail

/// Parses CSV text with a header row.
///
/// Empty cells are missing values and raise ParseError with their coordinates;
/// a non-numeric cell in an otherwise numeric column does too.
inline Dataset parse_csv(std::istream& in)
{
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (detail::trim(line).empty())
            continue;
        header = detail::split_csv_line(line);
        break;
    }
    if (header.empty())
        throw ParseError("empty CSV input");

    const std::size_t m = header.size();
    std::vector<std::vector<std::string>> cells;
    std::vector<std::size_t> line_of_row;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (detail::trim(line).empty())
            continue;
        auto row = detail::split_csv_line(line);
        if (row.size() != m)
            throw ParseError("expected " + std::to_string(m) + " fields, found " +
                                 std::to_string(row.size()),
                             line_no, std::min(row.size(), m) + 1);
        cells.push_back(std::move(row));
        line_of_row.push_back(line_no);
    }
    if (cells.empty())
        throw ParseError("CSV has a header but no data rows");

    const std::size_t n = cells.size();
    std::vector<bool> numeric(m, false);
    for (std::size_t j = 0; j < m; ++j) {
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (detail::parse_number(cells[i][j], v))
                numeric[j] = true;
    }

    Dataset d;
    std::vector<std::size_t> numeric_cols;
    for (std::size_t j = 0; j < m; ++j) {
        if (numeric[j]) {
            numeric_cols.push_back(j);
            d.names.push_back(header[j]);
        } else {
            d.label_names.push_back(header[j]);
        }
    }
    if (numeric_cols.empty())
        throw ParseError("CSV has no numeric columns");

    d.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(numeric_cols.size()));
    d.labels.assign(d.label_names.size(), std::vector<std::string>(n));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t label_idx = 0;
        std::size_t num_idx = 0;
        for (std::size_t j = 0; j < m; ++j) {
            const std::string& s = cells[i][j];
            if (s.empty())
                throw ParseError("missing value in column '" + header[j] + "'", line_of_row[i], j + 1);
            if (!numeric[j]) {
                d.labels[label_idx++][i] = s;
                continue;
            }
            double v = 0.0;
            if (!detail::parse_number(s, v))
                throw ParseError("non-numeric value '" + s + "' in column '" + header[j] + "'",
                                 line_of_row[i], j + 1);
            d.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(num_idx++)) = v;
        }
    }
    return d;
}

inline Dataset load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path + "'");
    return parse_csv(in);
}

/// Intercept plus the named covariates, in the given order.
inline RegressionData select_regression(const Dataset& data, const std::string& response,
                                        const std::vector<std::string>& covariates)
{
    if (covariates.empty())
        throw ConfigError("at least one covariate is required");
    RegressionData r;
    r.response = response;
    r.covariates = covariates;
    r.y = data.column(response);
    const Eigen::Index n = data.rows();
    const Eigen::Index k = static_cast<Eigen::Index>(covariates.size()) + 1;
    if (n <= k)
        throw ConfigError("need more rows (" + std::to_string(n) + ") than coefficients (" +
                          std::to_string(k) + ")");
    r.x.resize(n, k);
    r.x.col(0).setOnes();
    for (Eigen::Index j = 1; j < k; ++j)
        r.x.col(j) = data.column(covariates[static_cast<std::size_t>(j - 1)]);
    return r;
}

/// Pearson correlations with two-sided t-test p-values (n - 2 degrees of freedom).
struct CorrelationTable {
    std::vector<std::string> names;
    MatrixXd r;
    MatrixXd p;
};

inline CorrelationTable correlation_table(const Dataset& data, const std::vector<std::string>& columns)
{
    const Eigen::Index n = data.rows();
    if (n < 3)
        throw ConfigError("correlation needs at least 3 rows");
    const auto m = static_cast<Eigen::Index>(columns.size());
    MatrixXd centered(n, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const VectorXd c = data.column(columns[static_cast<std::size_t>(j)]);
        centered.col(j) = c.array() - c.mean();
        if (!(centered.col(j).squaredNorm() > 0.0))
            throw ConfigError("column '" + columns[static_cast<std::size_t>(j)] +
                              "' is constant; correlation undefined");
    }
    CorrelationTable t;
    t.names = columns;
    t.r.resize(m, m);
    t.p.resize(m, m);
    const double df = static_cast<double>(n - 2);
    const boost::math::students_t dist(df);
    for (Eigen::Index a = 0; a < m; ++a) {
        for (Eigen::Index b = 0; b < m; ++b) {
            if (a == b) {
                t.r(a, b) = 1.0;
                t.p(a, b) = 0.0;
                continue;
            }
            const double r = std::clamp(centered.col(a).dot(centered.col(b)) /
                                            (centered.col(a).norm() * centered.col(b).norm()),
                                        -1.0, 1.0);
            t.r(a, b) = r;
            if (std::abs(r) >= 1.0) {
                t.p(a, b) = 0.0;
            } else {
                const double stat = std::abs(r) * std::sqrt(df / (1.0 - r * r));
                t.p(a, b) = 2.0 * boost::math::cdf(boost::math::complement(dist, stat));
            }
        }
    }
    return t;
}

inline CorrelationTable correlation_table(const Dataset& data)
{
    return correlation_table(data, data.names);
}

struct PointEstimates {
    std::vector<std::string> coefficient_names;
    std::map<std::string, VectorXd> estimates;
    double a_hat = 0.0;
    double s2 = 0.0;
};

/// Full-sample estimates for each spec, against the diagonal competitor.
inline PointEstimates point_estimates(const RegressionData& reg, const std::vector<EstimatorSpec>& specs)
{
    const EstimatorBench bench(reg.x, DiagCompetitor{});
    PointEstimates out;
    out.coefficient_names = reg.coefficient_names();
    const VectorXd beta_hat = bench.design().ols(reg.y);
    out.s2 = bench.design().residual_variance(reg.y, beta_hat);
    out.a_hat = bench.a_hat(reg.y, beta_hat);
    const auto est = bench.evaluate(reg.y, specs);
    for (std::size_t i = 0; i < specs.size(); ++i)
        out.estimates[specs[i].name] = est[i];
    return out;
}

struct EfficiencyReport {
    std::vector<std::string> coefficient_names;
    std::map<std::string, VectorXd> point_estimates;
    std::map<std::string, double> mse;
    std::map<std::string, double> relative_efficiency;
    std::map<std::string, double> relative_efficiency_se;
    int bootstrap_replications = 0;
    std::uint64_t seed = 0;
    std::size_t redraws = 0;
    std::string reference = "full-sample LS";

    nlohmann::json to_json() const
    {
        nlohmann::json j;
        for (const auto& [name, v] : point_estimates)
            j["point_estimates"][name] = std::vector<double>(v.data(), v.data() + v.size());
        j["coefficients"] = coefficient_names;
        j["relative_efficiency"] = relative_efficiency;
        j["relative_efficiency_se"] = relative_efficiency_se;
        j["mse"] = mse;
        j["B"] = bootstrap_replications;
        j["seed"] = seed;
        j["redraws"] = redraws;
        j["bootstrap"] = "pairs (rows resampled with replacement)";
        j["reference"] = reference;
        return j;
    }
};

/// Pairs bootstrap: each replicate resamples rows with replacement, refits every
/// spec, and accumulates ||estimate - beta_LS(full sample)||^2. Relative
/// efficiency is MSE(spec) / MSE(LS). Rank-deficient resamples are redrawn; more
/// than 10 B redraws is an error.
inline EfficiencyReport bootstrap_efficiency(const RegressionData& reg,
                                             const std::vector<EstimatorSpec>& specs, int b,
                                             std::uint64_t seed)
{
    if (b < 100)
        throw ConfigError("bootstrap needs at least 100 replications");
    const PointEstimates full = point_estimates(reg, specs);
    const VectorXd reference = DesignFactors(reg.x).ols(reg.y);
    const Eigen::Index n = reg.x.rows();
    const std::size_t ne = specs.size();
    const std::size_t max_redraws = 10 * static_cast<std::size_t>(b);
    std::atomic<std::size_t> redraws{0};

    struct Replicate {
        double ls_loss = 0.0;
        std::vector<double> losses;
    };
    const auto reps = parallel_map<Replicate>(static_cast<std::size_t>(b), [&](std::size_t rep) {
        MatrixXd xs(n, reg.x.cols());
        VectorXd ys(n);
        for (std::uint64_t attempt = 0;; ++attempt) {
            CounterRng rng(seed, rep, attempt);
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto pick = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
                xs.row(i) = reg.x.row(pick);
                ys[i] = reg.y[pick];
            }
            try {
                const EstimatorBench bench(xs, DiagCompetitor{});
                Replicate r;
                r.ls_loss = (bench.design().ols(ys) - reference).squaredNorm();
                for (const VectorXd& e : bench.evaluate(ys, specs))
                    r.losses.push_back((e - reference).squaredNorm());
                return r;
            } catch (const SingularMatrixError&) {
                if (++redraws > max_redraws)
                    throw Error("bootstrap exceeded " + std::to_string(max_redraws) +
                                " redraws of rank-deficient resamples");
            }
        }
    });

    EfficiencyReport out;
    out.coefficient_names = full.coefficient_names;
    out.point_estimates = full.estimates;
    out.bootstrap_replications = b;
    out.seed = seed;
    out.redraws = redraws.load();
    std::vector<double> base(reps.size()), other(reps.size());
    for (std::size_t i = 0; i < reps.size(); ++i)
        base[i] = reps[i].ls_loss;
    double base_mean = 0.0;
    for (double v : base)
        base_mean += v;
    base_mean /= static_cast<double>(base.size());
    for (std::size_t e = 0; e < ne; ++e) {
        for (std::size_t i = 0; i < reps.size(); ++i)
            other[i] = reps[i].losses[e];
        double mean = 0.0;
        for (double v : other)
            mean += v;
        mean /= static_cast<double>(other.size());
        const double n_reps = static_cast<double>(other.size());
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < other.size(); ++i) {
            saa += (other[i] - mean) * (other[i] - mean);
            sbb += (base[i] - base_mean) * (base[i] - base_mean);
            sab += (other[i] - mean) * (base[i] - base_mean);
        }
        const double ratio = mean / base_mean;
        const double var = (saa - 2.0 * ratio * sab + ratio * ratio * sbb) /
                           ((n_reps - 1.0) * n_reps * base_mean * base_mean);
        out.mse[specs[e].name] = mean;
        out.relative_efficiency[specs[e].name] = ratio;
        out.relative_efficiency_se[specs[e].name] = std::sqrt(std::max(var, 0.0));
    }
    return out;
}

/// Plain-text rendering of the correlation table and efficiency report.
inline void print_report(std::ostream& os, const CorrelationTable& corr, const EfficiencyReport& rep)
{
    os << "Correlations (p-value)\n";
    os << std::setw(14) << "";
    for (const auto& n : corr.names)
        os << std::setw(18) << n;
    os << '\n';
    for (Eigen::Index a = 0; a < corr.r.rows(); ++a) {
        os << std::setw(14) << corr.names[static_cast<std::size_t>(a)];
        for (Eigen::Index b = 0; b < corr.r.cols(); ++b) {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(4) << corr.r(a, b);
            if (a != b)
                cell << " (" << std::fixed << std::setprecision(4) << corr.p(a, b) << ")";
            os << std::setw(18) << cell.str();
        }
        os << '\n';
    }
    os << "\nPoint estimates\n" << std::setw(14) << "";
    for (const auto& [name, v] : rep.point_estimates)
        os << std::setw(12) << name;
    os << '\n';
    for (std::size_t i = 0; i < rep.coefficient_names.size(); ++i) {
        os << std::setw(14) << rep.coefficient_names[i];
        for (const auto& [name, v] : rep.point_estimates)
            os << std::setw(12) << std::fixed << std::setprecision(4) << v[static_cast<Eigen::Index>(i)];
        os << '\n';
    }
    os << "\nRelative efficiency (bootstrap, B = " << rep.bootstrap_replications
       << ", seed = " << rep.seed << ", reference = " << rep.reference << ")\n";
    for (const auto& [name, eff] : rep.relative_efficiency) {
        os << std::setw(14) << name << std::setw(12) << std::fixed << std::setprecision(4) << eff
           << "  (se " << std::setprecision(4) << rep.relative_efficiency_se.at(name) << ")\n";
    }
    if (rep.bootstrap_replications < 1000)
        os << "note: fewer than 1000 bootstrap replications; standard errors are wide\n";
}

}  // namespace steinrule

// SPDX-License-Identifier: Apache-2.0
#include "lhsz/harness.hpp"

#include "lhsz/errors.hpp"
#include "lhsz/normal.hpp"
#include "lhsz/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lhsz {

void validate(const ExperimentConfig& config) {
    if (config.replications < 2) throw Error(ErrorKind::invalid_argument, "replications must be >= 2");
    if (config.sizes.empty()) throw Error(ErrorKind::invalid_argument, "sizes must not be empty");
    if (config.methods.empty()) throw Error(ErrorKind::invalid_argument, "methods must not be empty");
    for (std::size_t i = 0; i < config.sizes.size(); ++i) {
        if (config.sizes[i] == 0) throw Error(ErrorKind::invalid_argument, "sizes must be positive");
        if (i > 0 && config.sizes[i] <= config.sizes[i - 1]) {
            throw Error(ErrorKind::invalid_argument, "sizes must be strictly increasing");
        }
    }
    if (config.n_oracle < config.sizes.back()) {
        throw Error(ErrorKind::invalid_argument, "oracle budget must be >= the largest sample size");
    }
}

StreamKey replicate_key(std::uint64_t seed, Method method, std::size_t n, std::size_t r) {
    return StreamKey{seed, combine_ids({method == Method::lhs ? 1u : 2u, n, r}), 0, Purpose::permutation};
}

ReplicateData replicate_data(const Model& model, Method method, std::size_t n, const StreamKey& key,
                             bool stratify_aux) {
    const std::size_t d = model.problem.d;
    ReplicateData out;
    if (stratify_aux) {
        const DesignMatrix full = generate(method, n, d + 1, key);
        const auto cols = static_cast<Eigen::Index>(d);
        out.design = DesignMatrix(full.points().leftCols(cols), method, key);
        out.aux.resize(n);
        for (std::size_t i = 0; i < n; ++i) out.aux[i] = full(i, d);
    } else {
        out.design = generate(method, n, d, key);
        out.aux = uniform_stream(key.with_purpose(Purpose::response), n);
    }
    return out;
}

ReplicateSet run_replicates(const Model& model, Method method, std::size_t n, std::size_t replications,
                            std::uint64_t seed, bool stratify_aux, const SolveOptions& solve_options,
                            double max_failure_rate) {
    std::vector<std::optional<Eigen::VectorXd>> slots(replications);
    const Eigen::VectorXd init = model.problem.box.center();
    parallel_for(replications, [&](std::size_t r) {
        const auto data = replicate_data(model, method, n, replicate_key(seed, method, n, r), stratify_aux);
        try {
            const FitReport fit = solve(model.problem, data.design, data.aux, init, solve_options);
            if (fit.converged) slots[r] = fit.theta_hat;
        } catch (const Error& e) {
            if (!is_numerical(e.kind())) throw;
        }
    });
    ReplicateSet set;
    set.method = method;
    set.n = n;
    for (std::size_t r = 0; r < replications; ++r) {
        if (slots[r]) {
            set.estimates.push_back(*slots[r]);
            set.replicate_ids.push_back(r);
        } else {
            ++set.failures;
        }
    }
    if (static_cast<double>(set.failures) > max_failure_rate * static_cast<double>(replications)) {
        throw Error(ErrorKind::excessive_failures,
                    std::to_string(set.failures) + " of " + std::to_string(replications) + " fits failed for " +
                        std::string(to_string(method)) + " n=" + std::to_string(n));
    }
    return set;
}

std::vector<ExperimentRow> summarize(const ReplicateSet& cell, const Eigen::VectorXd& truth) {
    std::vector<ExperimentRow> rows;
    const std::size_t L = cell.estimates.size();
    const double Ld = static_cast<double>(L);
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
        ExperimentRow row;
        row.method = cell.method;
        row.n = cell.n;
        row.param = static_cast<std::size_t>(j);
        row.replications = L;
        row.failures = cell.failures;
        if (L > 0) {
            double mean = 0.0;
            for (const auto& e : cell.estimates) mean += e(j);
            mean /= Ld;
            double m2 = 0.0, m4 = 0.0;
            for (const auto& e : cell.estimates) {
                const double dev = e(j) - mean;
                m2 += dev * dev;
                m4 += dev * dev * dev * dev;
            }
            m4 /= Ld;
            row.mean = mean;
            row.variance = L > 1 ? m2 / (Ld - 1.0) : 0.0;
            const double bias = mean - truth(j);
            row.squared_bias = bias * bias;
            if (L > 3) {
                const double s2 = row.variance;
                row.variance_se = std::sqrt(std::max(0.0, (m4 - s2 * s2 * (Ld - 3.0) / (Ld - 1.0)) / Ld));
                const double se_bias = std::sqrt(s2 / Ld);
                row.squared_bias_se = std::sqrt(4.0 * bias * bias * se_bias * se_bias + 2.0 * std::pow(se_bias, 4));
            }
        }
        row.mse = row.variance + row.squared_bias;
        row.normalized_variance = static_cast<double>(cell.n) * row.variance;
        rows.push_back(row);
    }
    return rows;
}

const ExperimentRow& ExperimentTable::row(Method method, std::size_t n, std::size_t param) const {
    for (const auto& r : rows) {
        if (r.method == method && r.n == n && r.param == param) return r;
    }
    throw Error(ErrorKind::invalid_argument, "no experiment row for the requested cell");
}

const ReplicateSet& ExperimentTable::cell(Method method, std::size_t n) const {
    for (const auto& c : cells) {
        if (c.method == method && c.n == n) return c;
    }
    throw Error(ErrorKind::invalid_argument, "no experiment cell for the requested method and size");
}

ExperimentTable run_sweep(const ExperimentConfig& config) {
    validate(config);
    const Model model = make_model(config.model, config.truth);
    ExperimentTable table;
    for (Method method : config.methods) {
        for (std::size_t n : config.sizes) {
            ReplicateSet cell = run_replicates(model, method, n, config.replications, config.seed, config.stratify_aux,
                                               config.solve, config.max_failure_rate);
            auto rows = summarize(cell, model.truth);
            table.rows.insert(table.rows.end(), rows.begin(), rows.end());
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

OracleResult asymptotic_oracle(const Model& model, std::size_t n_oracle, std::uint64_t seed, std::size_t bins,
                               std::size_t inner, bool stratify_aux) {
    if (n_oracle < 10000) throw Error(ErrorKind::invalid_argument, "oracle budget must be >= 10^4");
    const auto q = static_cast<Eigen::Index>(model.problem.q);
    OracleResult out;
    out.n_oracle = n_oracle;

    VectorField jac = jacobian_field(model, model.truth);
    VectorField score = score_field(model, model.truth);
    if (stratify_aux) {
        jac = promote_auxiliary(jac);
        score = promote_auxiliary(score);
    }
    const auto a = grand_mean(jac, n_oracle, StreamKey{seed, 0, 1, Purpose::oracle});
    out.A = Eigen::Map<const Eigen::MatrixXd>(a.mean.data(), q, q);
    out.decomposition = remainder_covariance(score, n_oracle, bins, inner, StreamKey{seed, 0, 2, Purpose::oracle});
    out.R = out.decomposition.R;
    out.B = out.decomposition.full_cov;
    out.lhs_covariance = sandwich_lhs(out.A, out.R, 1, out.decomposition.psd_tolerance);
    out.iid_covariance = sandwich_iid(out.A, out.B, 1);
    out.normalized_variances = out.lhs_covariance.diagonal();
    return out;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = std::min(a.size(), b.size());
    if (n < 2) return 0.0;
    const double ma = std::accumulate(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
    const double mb = std::accumulate(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

QQTable qq_from_estimates(std::span<const Eigen::VectorXd> estimates, const Eigen::VectorXd& truth, std::size_t n,
                          Standardization standardization,
                          const std::optional<Eigen::VectorXd>& oracle_normalized_variances) {
    const std::size_t L = estimates.size();
    if (L < 2) throw Error(ErrorKind::invalid_argument, "Q-Q data needs at least two estimates");
    if (standardization == Standardization::oracle && !oracle_normalized_variances) {
        throw Error(ErrorKind::invalid_argument, "oracle standardization needs oracle variances");
    }
    QQTable table;
    table.n = n;
    table.replications = L;
    std::vector<double> probs(L), zq(L);
    for (std::size_t i = 0; i < L; ++i) {
        probs[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(L);
        zq[i] = normal_quantile(probs[i]);
    }
    for (Eigen::Index j = 0; j < truth.size(); ++j) {
        QQColumn col;
        col.param = static_cast<std::size_t>(j);
        col.empirical.resize(L);
        for (std::size_t r = 0; r < L; ++r) col.empirical[r] = estimates[r](j) - truth(j);
        double sd;
        if (standardization == Standardization::oracle) {
            sd = std::sqrt((*oracle_normalized_variances)(j) / static_cast<double>(n));
        } else {
            const double mean = std::accumulate(col.empirical.begin(), col.empirical.end(), 0.0) / static_cast<double>(L);
            double ss = 0.0;
            for (double v : col.empirical) ss += (v - mean) * (v - mean);
            sd = std::sqrt(ss / static_cast<double>(L - 1));
        }
        if (sd > 0.0) {
            for (auto& v : col.empirical) v /= sd;
        }
        std::sort(col.empirical.begin(), col.empirical.end());
        col.probabilities = probs;
        col.normal_quantiles = zq;
        col.correlation = correlation(col.empirical, col.normal_quantiles);
        table.columns.push_back(std::move(col));
    }
    return table;
}

QQTable qq_data(const Model& model, std::size_t n, std::size_t replications, std::uint64_t seed,
                Standardization standardization, const OracleResult* oracle, Method method, bool stratify_aux) {
    if (replications < 50) throw Error(ErrorKind::invalid_argument, "Q-Q data needs at least 50 replications");
    const ReplicateSet set = run_replicates(model, method, n, replications, seed, stratify_aux);
    std::optional<Eigen::VectorXd> v;
    if (oracle) v = oracle->normalized_variances;
    return qq_from_estimates(set.estimates, model.truth, n, standardization, v);
}

}  // namespace lhsz

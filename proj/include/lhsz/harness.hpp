// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/anova.hpp"
#include "lhsz/design.hpp"
#include "lhsz/models.hpp"
#include "lhsz/zsolve.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lhsz {

struct ExperimentConfig {
    std::string model;
    std::optional<Eigen::VectorXd> truth;  // overrides the model's built-in truth
    std::vector<Method> methods{Method::lhs, Method::iid};
    std::vector<std::size_t> sizes;
    std::size_t replications = 1000;
    std::uint64_t seed = 0;
    std::size_t n_oracle = 100000;
    McSizes oracle_mc{0, 64, 2048};  // outer defaults to n_oracle
    /// Draw the response uniform as an extra LHS column instead of IID.
    bool stratify_aux = false;
    SolveOptions solve;
    double max_failure_rate = 0.2;
};

/// Throws InvalidArgument unless L >= 2, sizes strictly increase and
/// n_oracle >= max(sizes).
void validate(const ExperimentConfig& config);

/// Replicated fits for one (method, n) cell. Estimates of successful fits
/// are kept in replicate order.
struct ReplicateSet {
    Method method = Method::lhs;
    std::size_t n = 0;
    std::vector<Eigen::VectorXd> estimates;
    std::vector<std::size_t> replicate_ids;
    std::size_t failures = 0;
};

/// Stream key of replicate r in the (method, n) cell under `seed`.
StreamKey replicate_key(std::uint64_t seed, Method method, std::size_t n, std::size_t r);

/// The design and response uniforms of one replicate.
struct ReplicateData {
    DesignMatrix design;
    std::vector<double> aux;
};
ReplicateData replicate_data(const Model& model, Method method, std::size_t n, const StreamKey& key,
                             bool stratify_aux);

ReplicateSet run_replicates(const Model& model, Method method, std::size_t n, std::size_t replications,
                            std::uint64_t seed, bool stratify_aux = false, const SolveOptions& solve = {},
                            double max_failure_rate = 0.2);

struct ExperimentRow {
    Method method = Method::lhs;
    std::size_t n = 0;
    std::size_t param = 0;  // 0-based
    double mean = 0.0;
    double variance = 0.0;
    double squared_bias = 0.0;
    double mse = 0.0;
    double normalized_variance = 0.0;
    double variance_se = 0.0;
    double squared_bias_se = 0.0;
    std::size_t replications = 0;
    std::size_t failures = 0;
};

struct ExperimentTable {
    std::vector<ExperimentRow> rows;
    std::vector<ReplicateSet> cells;

    const ExperimentRow& row(Method method, std::size_t n, std::size_t param) const;
    const ReplicateSet& cell(Method method, std::size_t n) const;
};

/// Per-parameter moments of one cell against the truth. mse is stored as
/// variance + squared_bias.
std::vector<ExperimentRow> summarize(const ReplicateSet& cell, const Eigen::VectorXd& truth);

ExperimentTable run_sweep(const ExperimentConfig& config);

struct OracleResult {
    Eigen::VectorXd normalized_variances;  // diag of A^{-1} R A^{-T}
    Eigen::MatrixXd lhs_covariance;        // A^{-1} R A^{-T}
    Eigen::MatrixXd iid_covariance;        // A^{-1} B A^{-T}
    Eigen::MatrixXd A;
    Eigen::MatrixXd R;
    Eigen::MatrixXd B;
    DecompositionReport decomposition;
    std::size_t n_oracle = 0;
};

/// Asymptotic n * Cov(theta_hat) under LHS at the truth: A = E[psi_dot] by
/// Monte Carlo over n_oracle points, R from remainder_covariance with
/// `n_oracle` outer points.
OracleResult asymptotic_oracle(const Model& model, std::size_t n_oracle, std::uint64_t seed,
                               std::size_t bins = 64, std::size_t inner = 2048, bool stratify_aux = false);

enum class Standardization { oracle, empirical };

struct QQColumn {
    std::size_t param = 0;
    std::vector<double> empirical;         // sorted standardized estimates
    std::vector<double> probabilities;     // (i - 1/2) / L
    std::vector<double> normal_quantiles;
    double correlation = 0.0;
};

struct QQTable {
    std::size_t n = 0;
    std::size_t replications = 0;
    std::vector<QQColumn> columns;
};

/// Q-Q pairing of standardized estimates (theta_hat - truth) / sd. Oracle
/// standardization uses sd = sqrt(normalized_variance / n).
QQTable qq_from_estimates(std::span<const Eigen::VectorXd> estimates, const Eigen::VectorXd& truth, std::size_t n,
                          Standardization standardization,
                          const std::optional<Eigen::VectorXd>& oracle_normalized_variances = std::nullopt);

QQTable qq_data(const Model& model, std::size_t n, std::size_t replications, std::uint64_t seed,
                Standardization standardization, const OracleResult* oracle = nullptr, Method method = Method::lhs,
                bool stratify_aux = false);

/// Pearson correlation of two equal-length sequences.
double correlation(std::span<const double> a, std::span<const double> b);

}  // namespace lhsz

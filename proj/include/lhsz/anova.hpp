// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lhsz {

/// A q-valued function of a point in [0,1]^d and, optionally, one auxiliary
/// uniform carrying response noise. eval must be deterministic and write
/// exactly q values.
struct VectorField {
    std::string label;
    std::size_t d = 0;
    std::size_t q = 0;
    bool uses_auxiliary = false;
    std::function<void(std::span<const double> x, double aux, std::span<double> out)> eval;
};

/// Treats the auxiliary uniform as structural coordinate d+1, so the
/// decomposition also extracts its main effect.
VectorField promote_auxiliary(const VectorField& f);

struct MeanEstimate {
    Eigen::VectorXd mean;
    Eigen::VectorXd standard_error;
    std::size_t samples = 0;
};

MeanEstimate grand_mean(const VectorField& f, std::size_t n_mc, const StreamKey& seed);

/// Estimate of E[f(X) - G | X_j = x] on the bin midpoints (k + 1/2)/K.
struct MainEffectTable {
    std::size_t coordinate = 0;
    std::size_t inner = 0;
    Eigen::MatrixXd values;      // K x q
    /// Per-bin sampling covariance of each table row (inner covariance / m),
    /// stored as K rows of row-major q x q blocks.
    Eigen::MatrixXd noise;

    std::size_t bins() const noexcept { return static_cast<std::size_t>(values.rows()); }

    /// Piecewise-linear interpolation through the midpoints, extrapolated
    /// linearly inside the two outer half-bins.
    void interpolate(double x, std::span<double> out) const;
};

MainEffectTable main_effect(const VectorField& f, std::size_t j, std::size_t bins, std::size_t inner,
                            const StreamKey& seed, const Eigen::VectorXd& grand);

/// Same, with G estimated from bins * inner IID samples under the same seed.
MainEffectTable main_effect(const VectorField& f, std::size_t j, std::size_t bins, std::size_t inner,
                            const StreamKey& seed);

struct McSizes {
    std::size_t outer = 0;
    std::size_t bins = 0;
    std::size_t inner = 0;
};

struct DecompositionReport {
    Eigen::VectorXd G;
    Eigen::VectorXd G_standard_error;
    std::vector<MainEffectTable> main_effects;
    /// A_j = integral of g_{-j} g_{-j}^T by the midpoint rule, table noise removed.
    std::vector<Eigen::MatrixXd> main_effect_cov;
    Eigen::MatrixXd R;
    Eigen::MatrixXd full_cov;
    /// full_cov - sum_j A_j - R.
    Eigen::MatrixXd residual;
    Eigen::MatrixXd residual_standard_errors;
    Eigen::MatrixXd standard_errors;  // for R
    double min_eigenvalue = 0.0;
    double psd_tolerance = 0.0;
    McSizes mc_sizes;

    /// g_rem at one point: f(x) - G - sum_j g_{-j}(x_j), using `value` = f(x).
    Eigen::VectorXd remainder(std::span<const double> x, std::span<const double> value) const;
    bool r_is_psd() const noexcept { return min_eigenvalue >= -psd_tolerance; }
};

struct DecompositionOptions {
    /// Throw DegenerateDecomposition when |residual| > 10 x its standard error.
    bool check_orthogonality = true;
};

/// Nested Monte Carlo estimate of the additive decomposition and of
/// R = E[g_rem g_rem^T]. Outer points are IID; main effects use `inner`
/// IID samples of the remaining coordinates (and the auxiliary uniform) per bin.
DecompositionReport remainder_covariance(const VectorField& f, std::size_t outer, std::size_t bins,
                                         std::size_t inner, const StreamKey& seed,
                                         DecompositionOptions options = {});

}  // namespace lhsz

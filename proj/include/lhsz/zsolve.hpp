// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/design.hpp"
#include "lhsz/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lhsz {

/// Closed per-coordinate intervals.
struct ParameterBox {
    std::vector<double> lower;
    std::vector<double> upper;

    static ParameterBox cube(std::size_t q, double lo, double hi);

    std::size_t size() const noexcept { return lower.size(); }
    bool contains(const Eigen::VectorXd& theta) const noexcept;
    Eigen::VectorXd center() const;
    Eigen::VectorXd project(const Eigen::VectorXd& theta) const;
};

/// Estimating equation psi_theta(x) in R^q together with its Jacobian in
/// theta. `observe` turns (point, auxiliary uniform) into the scalar
/// observation psi consumes (a response count for GLMs); it runs once per row.
struct ZProblem {
    std::string label;
    std::size_t q = 0;
    std::size_t d = 0;
    ParameterBox box;

    std::function<double(std::span<const double> x, double aux)> observe;
    std::function<void(std::span<const double> x, double obs, const Eigen::VectorXd& theta, std::span<double> out)> psi;
    /// out(j, k) = d psi_j / d theta_k; implementations resize `out` to q x q.
    std::function<void(std::span<const double> x, double obs, const Eigen::VectorXd& theta, Eigen::MatrixXd& out)>
        psi_dot;
    /// Optional norm bound on the second derivative tensor over the whole box.
    std::function<double(std::span<const double> x, double obs)> psi_ddot_bound;
};

std::vector<double> observations(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux);

/// Psi_n(theta) = (1/n) sum_i psi_theta(x_i).
Eigen::VectorXd psi_bar(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux,
                        const Eigen::VectorXd& theta);
Eigen::VectorXd psi_bar_observed(const ZProblem& problem, const DesignMatrix& design, std::span<const double> obs,
                                 const Eigen::VectorXd& theta);
/// (1/n) sum_i psi_dot_theta(x_i).
Eigen::MatrixXd jacobian_bar_observed(const ZProblem& problem, const DesignMatrix& design,
                                      std::span<const double> obs, const Eigen::VectorXd& theta);
/// (1/n) sum_i psi psi^T.
Eigen::MatrixXd score_outer_bar_observed(const ZProblem& problem, const DesignMatrix& design,
                                         std::span<const double> obs, const Eigen::VectorXd& theta);

struct SolveOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100;
    std::size_t max_halvings = 30;
    double condition_limit = 1e12;
};

struct FitReport {
    Eigen::VectorXd theta_hat;
    std::size_t iterations = 0;
    double residual_norm = 0.0;
    std::vector<double> residual_trace;  // ||Psi_n|| before the first step and after each accepted step
    Eigen::MatrixXd A_hat;
    Eigen::MatrixXd B_iid;
    Eigen::MatrixXd sandwich_iid;
    std::optional<Eigen::MatrixXd> sandwich_lhs;
    bool converged = false;
    Method design_method = Method::iid;
    std::size_t n = 0;
};

/// Damped projected Newton on Psi_n(theta) = 0. Non-convergence is reported
/// through FitReport::converged; a Jacobian with condition estimate above
/// the limit throws SingularJacobian.
FitReport solve(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux,
                const Eigen::VectorXd& theta_init, const SolveOptions& options = {});

/// A^{-1} B A^{-T} / n, symmetrized.
Eigen::MatrixXd sandwich_iid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t n,
                             double condition_limit = 1e12);

/// A^{-1} R A^{-T} / n. psd_tolerance < 0 selects 1e-8 * |trace(R)|.
Eigen::MatrixXd sandwich_lhs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R, std::size_t n,
                             double psd_tolerance = -1.0, double condition_limit = 1e12);

/// -A^{-1} Psi: the first-order approximation of theta_hat - theta_0.
Eigen::VectorXd linearized_error(const Eigen::MatrixXd& A, const Eigen::VectorXd& psi_mean);

struct JacobianCheck {
    double worst_ratio = 0.0;  // max over probes of ||J - FD|| / (1e-5 (1 + ||J||))
    std::size_t probes = 0;
    bool passed() const noexcept { return worst_ratio <= 1.0; }
};

/// Central differences of psi (relative step 1e-6) against psi_dot at random
/// points, auxiliaries and parameters drawn from the box.
JacobianCheck check_jacobian(const ZProblem& problem, std::size_t probes, const StreamKey& seed);

struct MomentCertificate {
    double psi_norm3 = 0.0;       // mean ||psi||^3
    double psi_dot_norm2 = 0.0;   // mean ||psi_dot||_F^2
    double ddot_bound_mean = 0.0; // mean of the second-derivative bound
    double ddot_bound_m2 = 0.0;   // mean of its square
    bool has_ddot_bound = false;
};

MomentCertificate moment_certificate(const ZProblem& problem, const DesignMatrix& design,
                                     std::span<const double> aux, const Eigen::VectorXd& theta);

}  // namespace lhsz

// SPDX-License-Identifier: Apache-2.0
#include "lhsz/zsolve.hpp"

#include "lhsz/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>

namespace lhsz {

ParameterBox ParameterBox::cube(std::size_t q, double lo, double hi) {
    return {std::vector<double>(q, lo), std::vector<double>(q, hi)};
}

bool ParameterBox::contains(const Eigen::VectorXd& theta) const noexcept {
    if (static_cast<std::size_t>(theta.size()) != size()) return false;
    for (std::size_t k = 0; k < size(); ++k) {
        const double t = theta(static_cast<Eigen::Index>(k));
        if (!(t >= lower[k] && t <= upper[k])) return false;
    }
    return true;
}

Eigen::VectorXd ParameterBox::center() const {
    Eigen::VectorXd c(static_cast<Eigen::Index>(size()));
    for (std::size_t k = 0; k < size(); ++k) c(static_cast<Eigen::Index>(k)) = 0.5 * (lower[k] + upper[k]);
    return c;
}

Eigen::VectorXd ParameterBox::project(const Eigen::VectorXd& theta) const {
    Eigen::VectorXd p = theta;
    for (std::size_t k = 0; k < size(); ++k) {
        auto& t = p(static_cast<Eigen::Index>(k));
        t = std::clamp(t, lower[k], upper[k]);
    }
    return p;
}

namespace {

void require_compatible(const ZProblem& problem, const DesignMatrix& design, std::size_t aux_len) {
    if (design.d() != problem.d) {
        throw Error(ErrorKind::invalid_argument, "design dimension does not match problem '" + problem.label + "'");
    }
    if (aux_len != design.n()) {
        throw Error(ErrorKind::invalid_argument, "need one auxiliary value per design row");
    }
}

void require_in_box(const ZProblem& problem, const Eigen::VectorXd& theta) {
    if (!problem.box.contains(theta)) {
        throw Error(ErrorKind::invalid_argument, "theta lies outside the parameter box");
    }
}

// Compensated (Neumaier) mean of psi; NaN on any non-finite term.
Eigen::VectorXd psi_mean_unchecked(const ZProblem& problem, const DesignMatrix& design, std::span<const double> obs,
                                   const Eigen::VectorXd& theta) {
    const auto q = static_cast<Eigen::Index>(problem.q);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(q), comp = Eigen::VectorXd::Zero(q), v(q);
    for (std::size_t i = 0; i < design.n(); ++i) {
        problem.psi(design.row(i), obs[i], theta, {v.data(), problem.q});
        for (Eigen::Index c = 0; c < q; ++c) {
            const double t = sum(c) + v(c);
            comp(c) += std::abs(sum(c)) >= std::abs(v(c)) ? (sum(c) - t) + v(c) : (v(c) - t) + sum(c);
            sum(c) = t;
        }
    }
    if (design.n() == 0) return sum;
    return (sum + comp) / static_cast<double>(design.n());
}

Eigen::PartialPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& A, double condition_limit) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw Error(ErrorKind::invalid_argument, "Jacobian must be a non-empty square matrix");
    }
    if (!A.allFinite()) throw Error(ErrorKind::non_finite_value, "Jacobian has non-finite entries");
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double rcond = lu.rcond();
    if (!(rcond * condition_limit >= 1.0)) {
        throw Error(ErrorKind::singular_jacobian,
                    "Jacobian condition estimate " + std::to_string(1.0 / rcond) + " exceeds limit");
    }
    return lu;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

std::vector<double> observations(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux) {
    require_compatible(problem, design, aux.size());
    std::vector<double> obs(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) {
        obs[i] = problem.observe ? problem.observe(design.row(i), aux[i]) : aux[i];
    }
    return obs;
}

Eigen::VectorXd psi_bar_observed(const ZProblem& problem, const DesignMatrix& design, std::span<const double> obs,
                                 const Eigen::VectorXd& theta) {
    require_compatible(problem, design, obs.size());
    require_in_box(problem, theta);
    Eigen::VectorXd m = psi_mean_unchecked(problem, design, obs, theta);
    if (!m.allFinite()) throw Error(ErrorKind::non_finite_value, "psi returned a non-finite value");
    return m;
}

Eigen::VectorXd psi_bar(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux,
                        const Eigen::VectorXd& theta) {
    const auto obs = observations(problem, design, aux);
    return psi_bar_observed(problem, design, obs, theta);
}

Eigen::MatrixXd jacobian_bar_observed(const ZProblem& problem, const DesignMatrix& design,
                                      std::span<const double> obs, const Eigen::VectorXd& theta) {
    require_compatible(problem, design, obs.size());
    const auto q = static_cast<Eigen::Index>(problem.q);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(q, q), J(q, q);
    for (std::size_t i = 0; i < design.n(); ++i) {
        problem.psi_dot(design.row(i), obs[i], theta, J);
        sum += J;
    }
    if (design.n() > 0) sum /= static_cast<double>(design.n());
    if (!sum.allFinite()) throw Error(ErrorKind::non_finite_value, "psi_dot returned a non-finite value");
    return sum;
}

Eigen::MatrixXd score_outer_bar_observed(const ZProblem& problem, const DesignMatrix& design,
                                         std::span<const double> obs, const Eigen::VectorXd& theta) {
    require_compatible(problem, design, obs.size());
    const auto q = static_cast<Eigen::Index>(problem.q);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(q, q);
    Eigen::VectorXd v(q);
    for (std::size_t i = 0; i < design.n(); ++i) {
        problem.psi(design.row(i), obs[i], theta, {v.data(), problem.q});
        sum.noalias() += v * v.transpose();
    }
    if (design.n() > 0) sum /= static_cast<double>(design.n());
    if (!sum.allFinite()) throw Error(ErrorKind::non_finite_value, "psi returned a non-finite value");
    return sum;
}

FitReport solve(const ZProblem& problem, const DesignMatrix& design, std::span<const double> aux,
                const Eigen::VectorXd& theta_init, const SolveOptions& options) {
    if (!(options.tol > 0.0)) throw Error(ErrorKind::invalid_argument, "solve: tol must be positive");
    require_in_box(problem, theta_init);
    const auto obs = observations(problem, design, aux);

    FitReport rep;
    rep.design_method = design.method();
    rep.n = design.n();

    Eigen::VectorXd theta = theta_init;
    Eigen::VectorXd psi = psi_bar_observed(problem, design, obs, theta);
    double r = psi.norm();
    rep.residual_trace.push_back(r);

    for (std::size_t it = 0; it < options.max_iter && r > options.tol; ++it) {
        const Eigen::MatrixXd J = jacobian_bar_observed(problem, design, obs, theta);
        const auto lu = checked_lu(J, options.condition_limit);
        const Eigen::VectorXd step = -lu.solve(psi);

        double scale = 1.0;
        bool accepted = false;
        for (std::size_t h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
            const Eigen::VectorXd trial = problem.box.project(theta + scale * step);
            const Eigen::VectorXd trial_psi = psi_mean_unchecked(problem, design, obs, trial);
            const double trial_r = trial_psi.norm();
            if (std::isfinite(trial_r) && trial_r < r) {
                theta = trial;
                psi = trial_psi;
                r = trial_r;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        ++rep.iterations;
        rep.residual_trace.push_back(r);
    }

    rep.theta_hat = theta;
    rep.residual_norm = r;
    rep.converged = r <= options.tol;
    rep.A_hat = jacobian_bar_observed(problem, design, obs, theta);
    rep.B_iid = score_outer_bar_observed(problem, design, obs, theta);
    rep.sandwich_iid = sandwich_iid(rep.A_hat, rep.B_iid, std::max<std::size_t>(rep.n, 1), options.condition_limit);
    return rep;
}

Eigen::MatrixXd sandwich_iid(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t n,
                             double condition_limit) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "sandwich: n must be >= 1");
    const auto lu = checked_lu(A, condition_limit);
    const Eigen::MatrixXd AinvB = lu.solve(B);
    const Eigen::MatrixXd S = lu.solve(AinvB.transpose());  // A^{-1} (A^{-1} B)^T = A^{-1} B^T A^{-T}
    return symmetrize(S) / static_cast<double>(n);
}

Eigen::MatrixXd sandwich_lhs(const Eigen::MatrixXd& A, const Eigen::MatrixXd& R, std::size_t n, double psd_tolerance,
                             double condition_limit) {
    if (R.rows() != A.rows() || R.cols() != A.cols()) {
        throw Error(ErrorKind::invalid_argument, "sandwich_lhs: R must match A in shape");
    }
    const Eigen::MatrixXd Rs = symmetrize(R);
    const double tol = psd_tolerance >= 0.0 ? psd_tolerance : 1e-8 * std::abs(Rs.trace());
    if (Rs.size() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Rs, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues()(0) < -tol) {
            throw Error(ErrorKind::non_psd_input, "remainder covariance is not positive semi-definite");
        }
    }
    return sandwich_iid(A, Rs, n, condition_limit);
}

Eigen::VectorXd linearized_error(const Eigen::MatrixXd& A, const Eigen::VectorXd& psi_mean) {
    return -checked_lu(A, 1e12).solve(psi_mean);
}

JacobianCheck check_jacobian(const ZProblem& problem, std::size_t probes, const StreamKey& seed) {
    const auto q = static_cast<Eigen::Index>(problem.q);
    Stream s(seed.with_purpose(Purpose::oracle));
    JacobianCheck out;
    out.probes = probes;
    std::vector<double> x(problem.d);
    Eigen::VectorXd theta(q), plus(q), minus(q);
    Eigen::MatrixXd J(q, q), fd(q, q);
    for (std::size_t p = 0; p < probes; ++p) {
        for (auto& v : x) v = s.next_uniform();
        const double obs = problem.observe ? problem.observe(x, s.next_uniform()) : s.next_uniform();
        for (Eigen::Index k = 0; k < q; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            theta(k) = problem.box.lower[ku] + (problem.box.upper[ku] - problem.box.lower[ku]) * s.next_uniform();
        }
        problem.psi_dot(x, obs, theta, J);
        for (Eigen::Index k = 0; k < q; ++k) {
            const double h = 1e-6 * std::max(1.0, std::abs(theta(k)));
            Eigen::VectorXd tp = theta, tm = theta;
            tp(k) += h;
            tm(k) -= h;
            problem.psi(x, obs, tp, {plus.data(), problem.q});
            problem.psi(x, obs, tm, {minus.data(), problem.q});
            fd.col(k) = (plus - minus) / (tp(k) - tm(k));
        }
        const double ratio = (J - fd).norm() / (1e-5 * (1.0 + J.norm()));
        out.worst_ratio = std::max(out.worst_ratio, std::isfinite(ratio) ? ratio : std::numeric_limits<double>::infinity());
    }
    return out;
}

MomentCertificate moment_certificate(const ZProblem& problem, const DesignMatrix& design,
                                     std::span<const double> aux, const Eigen::VectorXd& theta) {
    const auto obs = observations(problem, design, aux);
    const auto q = static_cast<Eigen::Index>(problem.q);
    MomentCertificate c;
    c.has_ddot_bound = static_cast<bool>(problem.psi_ddot_bound);
    Eigen::VectorXd v(q);
    Eigen::MatrixXd J(q, q);
    const double n = static_cast<double>(std::max<std::size_t>(design.n(), 1));
    for (std::size_t i = 0; i < design.n(); ++i) {
        problem.psi(design.row(i), obs[i], theta, {v.data(), problem.q});
        problem.psi_dot(design.row(i), obs[i], theta, J);
        c.psi_norm3 += std::pow(v.norm(), 3) / n;
        c.psi_dot_norm2 += J.squaredNorm() / n;
        if (c.has_ddot_bound) {
            const double b = problem.psi_ddot_bound(design.row(i), obs[i]);
            c.ddot_bound_mean += b / n;
            c.ddot_bound_m2 += b * b / n;
        }
    }
    return c;
}

}  // namespace lhsz

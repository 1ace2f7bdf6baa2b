// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/design.hpp"
#include "lhsz/rng.hpp"
#include "lhsz/zsolve.hpp"

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace lhsz {

/// Canonical exponential-family GLM: link h maps the mean to the linear
/// predictor eta = x^T theta.
struct GlmFamily {
    std::string label;
    double dispersion = 1.0;
    std::function<double(double)> link;          // h(mu)
    std::function<double(double)> inverse_link;  // h^{-1}(eta)
    std::function<double(double)> link_d1;       // h'(mu)
    std::function<double(double)> link_d2;       // h''(mu)
    /// Inverse CDF of the response given its mean, u in [0,1).
    std::function<double(double u, double mu)> response_quantile;
    /// Linear predictors the link can represent.
    double eta_min = -std::numeric_limits<double>::infinity();
    double eta_max = std::numeric_limits<double>::infinity();
};

GlmFamily poisson_log();
GlmFamily gaussian_identity(double dispersion = 1.0);

/// Smallest k with P(Poisson(lambda) <= k) > u, by forward summation of the
/// pmf with periodic rescaling so large lambda does not underflow.
std::uint64_t poisson_quantile(double u, double lambda);

struct FamilyCheck {
    double roundtrip_max_rel = 0.0;  // |h^{-1}(h(a)) - a| / |a|
    double derivative_max_rel = 0.0; // h' against central differences of h
    double min_abs_d1 = 0.0;
    bool passed() const noexcept {
        return roundtrip_max_rel <= 1e-12 && derivative_max_rel <= 1e-6 && min_abs_d1 > 0.0;
    }
};

/// Probes the link on `probes` points of eta in [eta_lo, eta_hi].
FamilyCheck check_family(const GlmFamily& family, double eta_lo, double eta_hi, std::size_t probes = 1024);

/// Range of x^T theta over x in [0,1]^d and theta in the box.
std::pair<double, double> linear_predictor_range(const ParameterBox& box);

/// Score of the canonical GLM, psi_j = (z - h^{-1}(x^T theta)) x_j / phi.
/// With `truth`, the observation is z = Q_resp(u; h^{-1}(x^T truth)) for the
/// auxiliary uniform u; without it the auxiliary value is the response itself.
/// Throws LinkDomainViolation if some x^T theta in the box leaves the link range.
ZProblem make_psi(const GlmFamily& family, std::size_t d, const ParameterBox& box,
                  std::optional<Eigen::VectorXd> truth = std::nullopt);

struct GlmDataset {
    DesignMatrix design;
    std::vector<double> aux;        // response uniforms
    std::vector<double> responses;
    std::optional<Eigen::VectorXd> truth;
};

GlmDataset generate_dataset(const GlmFamily& family, const Eigen::VectorXd& truth, const DesignMatrix& design,
                            const StreamKey& seed);

/// Same draw from caller-supplied uniforms (e.g. a stratified column).
GlmDataset generate_dataset(const GlmFamily& family, const Eigen::VectorXd& truth, const DesignMatrix& design,
                            std::vector<double> aux);

}  // namespace lhsz

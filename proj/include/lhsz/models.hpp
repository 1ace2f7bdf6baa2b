// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/anova.hpp"
#include "lhsz/glm.hpp"
#include "lhsz/zsolve.hpp"

#include <Eigen/Core>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lhsz {

/// A named estimating problem with a known truth, used by the CLI and harness.
struct Model {
    std::string name;
    std::string description;
    ZProblem problem;
    Eigen::VectorXd truth;
    std::optional<GlmFamily> family;
};

/// Built-in models:
///   poisson-log-d9        Poisson/log GLM on [0,1]^9, truth (7, -sqrt2, 1/2, -1/3, sqrt5, -7, sqrt2, -1/2, -sqrt5)
///   poisson-log-d1        Poisson/log GLM on [0,1], truth 1, box [-5,5]
///   gaussian-identity-d2  Gaussian/identity GLM, phi = 1, truth (1, -1/2)
///   mean-d1               psi = x - theta, truth 1/2
///   additive-d2           psi = x1 + x2 - theta, truth 1
/// `truth` overrides the built-in truth used to generate responses.
Model make_model(std::string_view name, std::optional<Eigen::VectorXd> truth = std::nullopt);
std::vector<std::string> model_names();

/// (x, u) -> psi_theta(x, observe(x, u)).
VectorField score_field(const Model& model, const Eigen::VectorXd& theta);

/// (x, u) -> vec(psi_dot_theta(x, observe(x, u))), column-major q*q outputs.
VectorField jacobian_field(const Model& model, const Eigen::VectorXd& theta);

/// Named fields for `decompose`: product-d2 (x1 x2), sum-d2 (x1 + x2),
/// constant-d2 (3), and psi:<model> (the model's score at its truth).
VectorField builtin_field(std::string_view name);
std::vector<std::string> field_names();

}  // namespace lhsz

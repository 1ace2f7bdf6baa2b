// SPDX-License-Identifier: Apache-2.0
#include "lhsz/models.hpp"

#include "lhsz/errors.hpp"

#include <cmath>
#include <numbers>

namespace lhsz {
namespace {

Model glm_model(std::string name, GlmFamily family, Eigen::VectorXd truth, ParameterBox box, std::string description) {
    Model m;
    m.name = std::move(name);
    m.description = std::move(description);
    m.problem = make_psi(family, static_cast<std::size_t>(truth.size()), box, truth);
    m.problem.label = m.name;
    m.truth = std::move(truth);
    m.family = std::move(family);
    return m;
}

// psi(x, theta) = sum_j x_j - theta.
Model location_model(std::string name, std::size_t d, double truth, ParameterBox box, std::string description) {
    Model m;
    m.name = std::move(name);
    m.description = std::move(description);
    m.truth = Eigen::VectorXd::Constant(1, truth);
    ZProblem& p = m.problem;
    p.label = m.name;
    p.q = 1;
    p.d = d;
    p.box = std::move(box);
    p.observe = [](std::span<const double>, double aux) { return aux; };
    p.psi = [](std::span<const double> x, double, const Eigen::VectorXd& theta, std::span<double> out) {
        double s = 0.0;
        for (double v : x) s += v;
        out[0] = s - theta(0);
    };
    p.psi_dot = [](std::span<const double>, double, const Eigen::VectorXd&, Eigen::MatrixXd& out) {
        out.resize(1, 1);
        out(0, 0) = -1.0;
    };
    p.psi_ddot_bound = [](std::span<const double>, double) { return 0.0; };
    return m;
}

}  // namespace

std::vector<std::string> model_names() {
    return {"poisson-log-d9", "poisson-log-d1", "gaussian-identity-d2", "mean-d1", "additive-d2"};
}

Model make_model(std::string_view name, std::optional<Eigen::VectorXd> truth) {
    Model m;
    if (name == "poisson-log-d9") {
        Eigen::VectorXd t(9);
        const double r2 = std::numbers::sqrt2, r5 = std::sqrt(5.0);
        t << 7.0, -r2, 0.5, -1.0 / 3.0, r5, -7.0, r2, -0.5, -r5;
        m = glm_model("poisson-log-d9", poisson_log(), t, ParameterBox::cube(9, -10.0, 10.0),
                      "Poisson regression with log link on nine uniform covariates");
    } else if (name == "poisson-log-d1") {
        m = glm_model("poisson-log-d1", poisson_log(), Eigen::VectorXd::Constant(1, 1.0),
                      ParameterBox::cube(1, -5.0, 5.0), "Scalar Poisson regression with log link");
    } else if (name == "gaussian-identity-d2") {
        Eigen::VectorXd t(2);
        t << 1.0, -0.5;
        m = glm_model("gaussian-identity-d2", gaussian_identity(1.0), t, ParameterBox::cube(2, -10.0, 10.0),
                      "Gaussian linear model with unit dispersion on two uniform covariates");
    } else if (name == "mean-d1") {
        m = location_model("mean-d1", 1, 0.5, ParameterBox{{-1.0}, {2.0}}, "Mean of a uniform input");
    } else if (name == "additive-d2") {
        m = location_model("additive-d2", 2, 1.0, ParameterBox{{-1.0}, {3.0}}, "Mean of x1 + x2 (purely additive)");
    } else {
        throw Error(ErrorKind::invalid_argument, "unknown model '" + std::string(name) + "'");
    }
    if (truth) {
        if (truth->size() != m.truth.size()) {
            throw Error(ErrorKind::invalid_argument, "truth for '" + m.name + "' needs " +
                                                         std::to_string(m.truth.size()) + " components");
        }
        if (!m.problem.box.contains(*truth)) {
            throw Error(ErrorKind::invalid_argument, "truth lies outside the parameter box of '" + m.name + "'");
        }
        if (m.family) {
            m = glm_model(m.name, *m.family, *truth, m.problem.box, m.description);
        } else {
            m.truth = *truth;
        }
    }
    return m;
}

VectorField score_field(const Model& model, const Eigen::VectorXd& theta) {
    VectorField f;
    f.label = "psi:" + model.name;
    f.d = model.problem.d;
    f.q = model.problem.q;
    f.uses_auxiliary = model.family.has_value();
    f.eval = [p = model.problem, theta](std::span<const double> x, double aux, std::span<double> out) {
        const double obs = p.observe ? p.observe(x, aux) : aux;
        p.psi(x, obs, theta, out);
    };
    return f;
}

VectorField jacobian_field(const Model& model, const Eigen::VectorXd& theta) {
    VectorField f;
    f.label = "psi_dot:" + model.name;
    f.d = model.problem.d;
    f.q = model.problem.q * model.problem.q;
    f.uses_auxiliary = model.family.has_value();
    const auto q = static_cast<Eigen::Index>(model.problem.q);
    f.eval = [p = model.problem, theta, q](std::span<const double> x, double aux, std::span<double> out) {
        thread_local Eigen::MatrixXd J;
        J.resize(q, q);
        const double obs = p.observe ? p.observe(x, aux) : aux;
        p.psi_dot(x, obs, theta, J);
        std::copy(J.data(), J.data() + J.size(), out.begin());
    };
    return f;
}

std::vector<std::string> field_names() {
    std::vector<std::string> names{"product-d2", "sum-d2", "constant-d2"};
    for (const auto& m : model_names()) names.push_back("psi:" + m);
    return names;
}

VectorField builtin_field(std::string_view name) {
    VectorField f;
    f.label = std::string(name);
    f.d = 2;
    f.q = 1;
    if (name == "product-d2") {
        f.eval = [](std::span<const double> x, double, std::span<double> out) { out[0] = x[0] * x[1]; };
    } else if (name == "sum-d2") {
        f.eval = [](std::span<const double> x, double, std::span<double> out) { out[0] = x[0] + x[1]; };
    } else if (name == "constant-d2") {
        f.eval = [](std::span<const double>, double, std::span<double> out) { out[0] = 3.0; };
    } else if (name.starts_with("psi:")) {
        const Model m = make_model(name.substr(4));
        return score_field(m, m.truth);
    } else {
        throw Error(ErrorKind::invalid_argument, "unknown field '" + std::string(name) + "'");
    }
    return f;
}

}  // namespace lhsz

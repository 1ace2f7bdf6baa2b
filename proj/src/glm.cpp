// SPDX-License-Identifier: Apache-2.0
#include "lhsz/glm.hpp"

#include "lhsz/errors.hpp"
#include "lhsz/normal.hpp"

#include <cmath>
#include <numbers>

namespace lhsz {

GlmFamily poisson_log() {
    GlmFamily f;
    f.label = "poisson-log";
    f.dispersion = 1.0;
    f.link = [](double mu) { return std::log(mu); };
    f.inverse_link = [](double eta) { return std::exp(eta); };
    f.link_d1 = [](double mu) { return 1.0 / mu; };
    f.link_d2 = [](double mu) { return -1.0 / (mu * mu); };
    f.response_quantile = [](double u, double mu) { return static_cast<double>(poisson_quantile(u, mu)); };
    // exp overflows beyond ~709.
    f.eta_min = -700.0;
    f.eta_max = 700.0;
    return f;
}

GlmFamily gaussian_identity(double dispersion) {
    GlmFamily f;
    f.label = "gaussian-identity";
    f.dispersion = dispersion;
    f.link = [](double mu) { return mu; };
    f.inverse_link = [](double eta) { return eta; };
    f.link_d1 = [](double) { return 1.0; };
    f.link_d2 = [](double) { return 0.0; };
    const double sd = std::sqrt(dispersion);
    // Shift u onto the midpoint of its 2^-53 cell so u = 0 maps inside (0,1).
    f.response_quantile = [sd](double u, double mu) { return mu + sd * normal_quantile(u + 0x1.0p-54); };
    return f;
}

std::uint64_t poisson_quantile(double u, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(ErrorKind::domain_error, "poisson_quantile: lambda must be positive and finite");
    }
    if (!(u >= 0.0 && u < 1.0)) throw Error(ErrorKind::domain_error, "poisson_quantile: u must lie in [0,1)");

    // Terms t_k = lambda^k / k! kept as t * exp(log_scale); cdf = S * exp(log_scale - lambda).
    constexpr double big = 1e250;
    const double log_big = std::log(big);
    const double log_u = u > 0.0 ? std::log(u) : -std::numeric_limits<double>::infinity();
    double term = 1.0;
    double sum = 1.0;
    double log_scale = 0.0;
    std::uint64_t k = 0;
    auto log_cdf = [&] { return std::log(sum) + log_scale - lambda; };
    while (!(log_cdf() > log_u)) {
        ++k;
        term *= lambda / static_cast<double>(k);
        const double before = sum;
        sum += term;
        if (sum > big) {
            term /= big;
            sum /= big;
            log_scale += log_big;
        }
        // Past the mode, once terms stop moving the sum the cdf has reached
        // its floating-point limit below u; k is then the answer.
        if (static_cast<double>(k) > lambda && sum == before) break;
    }
    return k;
}

FamilyCheck check_family(const GlmFamily& family, double eta_lo, double eta_hi, std::size_t probes) {
    FamilyCheck c;
    c.min_abs_d1 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < probes; ++i) {
        const double t = probes == 1 ? 0.5 : static_cast<double>(i) / static_cast<double>(probes - 1);
        const double eta = eta_lo + (eta_hi - eta_lo) * t;
        const double a = family.inverse_link(eta);
        const double scale = std::max(std::abs(a), std::numeric_limits<double>::min());
        c.roundtrip_max_rel = std::max(c.roundtrip_max_rel, std::abs(family.inverse_link(family.link(a)) - a) / scale);
        const double h = 1e-6 * scale;
        const double fd = (family.link(a + h) - family.link(a - h)) / (2.0 * h);
        const double d1 = family.link_d1(a);
        c.derivative_max_rel = std::max(c.derivative_max_rel, std::abs(fd - d1) / std::max(std::abs(d1), 1e-300));
        c.min_abs_d1 = std::min(c.min_abs_d1, std::abs(d1));
    }
    return c;
}

std::pair<double, double> linear_predictor_range(const ParameterBox& box) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < box.size(); ++k) {
        lo += std::min(0.0, box.lower[k]);
        hi += std::max(0.0, box.upper[k]);
    }
    return {lo, hi};
}

namespace {

double linear_predictor(std::span<const double> x, const Eigen::VectorXd& theta) {
    double eta = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) eta += x[j] * theta(static_cast<Eigen::Index>(j));
    return eta;
}

}  // namespace

ZProblem make_psi(const GlmFamily& family, std::size_t d, const ParameterBox& box,
                  std::optional<Eigen::VectorXd> truth) {
    if (box.size() != d) throw Error(ErrorKind::invalid_argument, "make_psi: box dimension must equal d");
    const auto [eta_lo, eta_hi] = linear_predictor_range(box);
    if (eta_lo < family.eta_min || eta_hi > family.eta_max || !std::isfinite(family.inverse_link(eta_lo)) ||
        !std::isfinite(family.inverse_link(eta_hi))) {
        throw Error(ErrorKind::link_domain_violation,
                    "linear predictor range of the parameter box leaves the domain of link '" + family.label + "'");
    }
    if (truth && static_cast<std::size_t>(truth->size()) != d) {
        throw Error(ErrorKind::invalid_argument, "make_psi: truth must have d components");
    }

    ZProblem p;
    p.label = family.label + "-d" + std::to_string(d);
    p.q = d;
    p.d = d;
    p.box = box;
    const double phi = family.dispersion;
    auto inv = family.inverse_link;
    auto d1 = family.link_d1;
    auto d2 = family.link_d2;

    if (truth) {
        p.observe = [inv, quant = family.response_quantile, t = *truth](std::span<const double> x, double u) {
            return quant(u, inv(linear_predictor(x, t)));
        };
    } else {
        p.observe = [](std::span<const double>, double aux) { return aux; };
    }
    p.psi = [inv, phi](std::span<const double> x, double z, const Eigen::VectorXd& theta, std::span<double> out) {
        const double r = (z - inv(linear_predictor(x, theta))) / phi;
        for (std::size_t j = 0; j < x.size(); ++j) out[j] = r * x[j];
    };
    p.psi_dot = [inv, d1, phi](std::span<const double> x, double, const Eigen::VectorXd& theta, Eigen::MatrixXd& out) {
        const double c = -1.0 / (phi * d1(inv(linear_predictor(x, theta))));
        const auto n = static_cast<Eigen::Index>(x.size());
        out.resize(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                out(j, k) = c * x[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(k)];
            }
        }
    };
    // ||psi_ddot||_F = |h''(mu)| / (phi |h'(mu)|^3) * ||x||^3, maximized over eta reachable in the box.
    p.psi_ddot_bound = [inv, d1, d2, phi, box](std::span<const double> x, double) {
        double lo = 0.0, hi = 0.0, norm2 = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            lo += std::min(x[j] * box.lower[j], x[j] * box.upper[j]);
            hi += std::max(x[j] * box.lower[j], x[j] * box.upper[j]);
            norm2 += x[j] * x[j];
        }
        double worst = 0.0;
        constexpr int grid = 16;
        for (int g = 0; g <= grid; ++g) {
            const double mu = inv(lo + (hi - lo) * g / grid);
            const double a = d1(mu);
            worst = std::max(worst, std::abs(d2(mu)) / (phi * std::abs(a * a * a)));
        }
        return worst * std::pow(norm2, 1.5);
    };
    return p;
}

GlmDataset generate_dataset(const GlmFamily& family, const Eigen::VectorXd& truth, const DesignMatrix& design,
                            std::vector<double> aux) {
    if (static_cast<std::size_t>(truth.size()) != design.d()) {
        throw Error(ErrorKind::invalid_argument, "generate_dataset: truth must have d components");
    }
    if (aux.size() != design.n()) throw Error(ErrorKind::invalid_argument, "generate_dataset: one uniform per row");
    GlmDataset ds;
    ds.design = design;
    ds.truth = truth;
    ds.responses.resize(design.n());
    for (std::size_t i = 0; i < design.n(); ++i) {
        const double eta = linear_predictor(design.row(i), truth);
        const double mu = family.inverse_link(eta);
        if (eta < family.eta_min || eta > family.eta_max || !std::isfinite(mu)) {
            throw Error(ErrorKind::link_domain_violation, "mean of row " + std::to_string(i) + " is not representable");
        }
        ds.responses[i] = family.response_quantile(aux[i], mu);
    }
    ds.aux = std::move(aux);
    return ds;
}

GlmDataset generate_dataset(const GlmFamily& family, const Eigen::VectorXd& truth, const DesignMatrix& design,
                            const StreamKey& seed) {
    std::vector<double> aux;
    if (design.n() > 0) aux = uniform_stream(seed.with_purpose(Purpose::response), design.n());
    return generate_dataset(family, truth, design, std::move(aux));
}

}  // namespace lhsz

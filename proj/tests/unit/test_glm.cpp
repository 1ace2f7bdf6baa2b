// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lhsz/errors.hpp"
#include "lhsz/glm.hpp"
#include "lhsz/models.hpp"
#include "lhsz/normal.hpp"
#include "lhsz/rng.hpp"

#include <cmath>
#include <numbers>

namespace lhsz {
namespace {

Eigen::VectorXd reference_truth() {
    Eigen::VectorXd t(9);
    t << 7.0, -std::sqrt(2.0), 0.5, -1.0 / 3.0, std::sqrt(5.0), -7.0, std::sqrt(2.0), -0.5, -std::sqrt(5.0);
    return t;
}

double bisect_quantile(double p) {
    if (p > 0.5) return -bisect_quantile(1.0 - p);
    double lo = -40.0, hi = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (0.5 * std::erfc(-mid / std::numbers::sqrt2) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

TEST(NormalTest, QuantileCenter) { EXPECT_EQ(normal_quantile(0.5), 0.0); }

TEST(NormalTest, QuantileAgainstBisection) {
    EXPECT_NEAR(normal_quantile(0.975), 1.959964, 1e-6);
    for (double p : {1e-300, 1e-12, 0.0013499, 0.02, 0.3, 0.7, 0.975, 1 - 1e-10}) {
        EXPECT_NEAR(normal_quantile(p), bisect_quantile(p), 1e-9 * (1 + std::abs(bisect_quantile(p)))) << p;
    }
}

// Phi(-3) by the continued fraction for the Mills ratio.
TEST(NormalTest, ThreeSigmaTail) {
    const double x = 3.0;
    double cf = x;
    for (int k = 60; k >= 1; --k) cf = x + k / cf;
    const double phi_m3 = std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi) / cf;
    EXPECT_NEAR(phi_m3, 0.0013499, 1e-7);
    EXPECT_NEAR(normal_quantile(0.0013499), -3.0, 1e-3);
    EXPECT_NEAR(normal_cdf(-3.0), phi_m3, 1e-12);
}

TEST(NormalTest, DomainErrors) {
    for (double p : {0.0, 1.0, -0.1, std::nan("")}) {
        try {
            normal_quantile(p);
            FAIL() << p;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::domain_error);
        }
    }
}

TEST(PoissonQuantileTest, SmallCases) {
    EXPECT_EQ(poisson_quantile(0.0, 1.0), 0u);
    // CDF(0) = e^-1 = 0.3679 < 0.5 <= CDF(1) = 0.7358
    const double cdf0 = std::exp(-1.0), cdf1 = cdf0 + std::exp(-1.0);
    ASSERT_LT(cdf0, 0.5);
    ASSERT_GE(cdf1, 0.5);
    EXPECT_EQ(poisson_quantile(0.5, 1.0), 1u);
    EXPECT_EQ(poisson_quantile(std::nextafter(cdf0, 0.0), 1.0), 0u);
    EXPECT_EQ(poisson_quantile(cdf0 + 1e-12, 1.0), 1u);
}

TEST(PoissonQuantileTest, MeanOverStream) {
    const auto u = uniform_stream({8, 0, 0, Purpose::response}, 1000000);
    double s = 0.0;
    for (double v : u) s += static_cast<double>(poisson_quantile(v, 4.0));
    EXPECT_NEAR(s / u.size(), 4.0, 0.008);
}

TEST(PoissonQuantileTest, LargeMean) {
    const double lambda = 2000.0;
    const auto u = uniform_stream({9, 0, 0, Purpose::response}, 20000);
    double s = 0.0, s2 = 0.0;
    for (double v : u) {
        const double k = static_cast<double>(poisson_quantile(v, lambda));
        s += k;
        s2 += k * k;
    }
    const double m = s / u.size();
    EXPECT_NEAR(m, lambda, 4.0 * std::sqrt(lambda / u.size()));
    EXPECT_NEAR((s2 / u.size() - m * m) / lambda, 1.0, 0.05);
}

TEST(PoissonQuantileTest, DomainErrors) {
    EXPECT_THROW(poisson_quantile(1.0, 1.0), Error);
    EXPECT_THROW(poisson_quantile(0.5, 0.0), Error);
    EXPECT_THROW(poisson_quantile(0.5, std::numeric_limits<double>::infinity()), Error);
}

TEST(FamilyTest, ChecksPass) {
    EXPECT_TRUE(check_family(poisson_log(), -30, 30).passed());
    EXPECT_TRUE(check_family(gaussian_identity(2.0), -30, 30).passed());
}

TEST(FamilyTest, BrokenDerivativeFails) {
    auto f = poisson_log();
    f.link_d1 = [](double mu) { return 2.0 / mu; };
    EXPECT_FALSE(check_family(f, -5, 5).passed());
}

TEST(GlmPsiTest, DirectSubstitution) {
    const auto p = make_psi(poisson_log(), 1, ParameterBox::cube(1, -5, 5));
    const std::vector<double> x{1.0};
    double out = 0.0;
    p.psi(x, 3.0, Eigen::VectorXd::Zero(1), {&out, 1});
    EXPECT_DOUBLE_EQ(out, 2.0);
    Eigen::MatrixXd J;
    p.psi_dot(x, 3.0, Eigen::VectorXd::Zero(1), J);
    EXPECT_DOUBLE_EQ(J(0, 0), -1.0);
}

TEST(GlmPsiTest, GaussianJacobianIsDispersionScaled) {
    const auto p = make_psi(gaussian_identity(4.0), 2, ParameterBox::cube(2, -5, 5));
    const std::vector<double> x{0.5, 1.0};
    Eigen::MatrixXd J;
    p.psi_dot(x, 0.0, Eigen::VectorXd::Zero(2), J);
    EXPECT_DOUBLE_EQ(J(0, 0), -0.0625);
    EXPECT_DOUBLE_EQ(J(0, 1), -0.125);
    EXPECT_DOUBLE_EQ(J(1, 1), -0.25);
}

TEST(GlmPsiTest, LinkDomainViolation) {
    try {
        make_psi(poisson_log(), 9, ParameterBox::cube(9, -100, 100));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::link_domain_violation);
    }
    const auto [lo, hi] = linear_predictor_range(ParameterBox::cube(9, -10, 10));
    EXPECT_DOUBLE_EQ(lo, -90.0);
    EXPECT_DOUBLE_EQ(hi, 90.0);
}

// Canonical link with unit dispersion: E[psi psi^T] = -E[psi_dot] at the truth.
TEST(GlmPsiTest, InformationIdentity) {
    const auto m = make_model("poisson-log-d9");
    const std::size_t n = 400000;
    const auto design = generate(Method::iid, n, 9, {12, 0, 0, Purpose::permutation});
    const auto data = generate_dataset(*m.family, m.truth, design, StreamKey{12, 0, 0, Purpose::response});
    const auto B = score_outer_bar_observed(m.problem, design, data.responses, m.truth);
    const auto A = jacobian_bar_observed(m.problem, design, data.responses, m.truth);
    EXPECT_LT((A + B).norm() / A.norm(), 0.02);
}

TEST(DatasetTest, UnitMeanResponses) {
    const std::size_t n = 100000;
    const auto design = generate(Method::iid, n, 3, {13, 0, 0, Purpose::permutation});
    const auto data = generate_dataset(poisson_log(), Eigen::VectorXd::Zero(3), design, StreamKey{13, 0, 0, Purpose::response});
    ASSERT_EQ(data.responses.size(), n);
    double s = 0.0;
    for (double z : data.responses) {
        EXPECT_EQ(z, std::floor(z));
        s += z;
    }
    EXPECT_NEAR(s / n, 1.0, 0.013);
}

// E[exp(x'theta)] over the unit cube factorizes into prod (e^t - 1)/t.
TEST(DatasetTest, ReferenceTruthMeanIntensity) {
    const auto t = reference_truth();
    double closed = 1.0;
    for (Eigen::Index j = 0; j < 9; ++j) closed *= std::expm1(t(j)) / t(j);
    const std::size_t n = 1000000;
    const auto design = generate(Method::iid, n, 9, {14, 0, 0, Purpose::permutation});
    double mc = 0.0;
    for (std::size_t i = 0; i < n; ++i) mc += std::exp(Eigen::Map<const Eigen::VectorXd>(design.row(i).data(), 9).dot(t));
    mc /= n;
    EXPECT_NEAR(mc / closed, 1.0, 0.01);
    const auto data = generate_dataset(poisson_log(), t, design, StreamKey{14, 0, 0, Purpose::response});
    double s = 0.0;
    for (double z : data.responses) s += z;
    EXPECT_NEAR(s / n / closed, 1.0, 0.01);
}

TEST(DatasetTest, EmptyDesign) {
    const DesignMatrix empty(RowMatrix(0, 4), Method::lhs, {});
    const auto data = generate_dataset(poisson_log(), Eigen::VectorXd::Zero(4), empty, StreamKey{});
    EXPECT_TRUE(data.responses.empty());
    EXPECT_TRUE(data.aux.empty());
}

TEST(DatasetTest, TruthDimensionChecked) {
    const auto design = generate(Method::iid, 4, 3, {});
    EXPECT_THROW(generate_dataset(poisson_log(), Eigen::VectorXd::Zero(2), design, StreamKey{}), Error);
}

TEST(DatasetTest, ObserveHookReproducesResponses) {
    const auto m = make_model("poisson-log-d9");
    const auto design = generate(Method::lhs, 200, 9, {15, 0, 0, Purpose::permutation});
    const auto data = generate_dataset(*m.family, m.truth, design, StreamKey{15, 0, 0, Purpose::response});
    EXPECT_EQ(observations(m.problem, design, data.aux), data.responses);
}

TEST(ModelTest, Registry) {
    for (const auto& name : model_names()) {
        const auto m = make_model(name);
        EXPECT_EQ(m.name, name);
        EXPECT_TRUE(m.problem.box.contains(m.truth));
    }
    EXPECT_THROW(make_model("nope"), Error);
    EXPECT_THROW(make_model("poisson-log-d1", Eigen::VectorXd::Constant(1, 50.0)), Error);
    EXPECT_EQ(make_model("poisson-log-d9").truth, reference_truth());
}

}  // namespace
}  // namespace lhsz

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lhsz/design.hpp"
#include "lhsz/errors.hpp"
#include "lhsz/normal.hpp"

#include <cmath>
#include <set>

namespace lhsz {
namespace {

std::set<std::size_t> strata(const DesignMatrix& d, std::size_t j) {
    std::set<std::size_t> s;
    for (std::size_t i = 0; i < d.n(); ++i) s.insert(static_cast<std::size_t>(std::floor(d(i, j) * d.n())));
    return s;
}

TEST(DesignTest, FourByTwoOccupiesEachStratumOnce) {
    const auto d = generate(Method::lhs, 4, 2, {7, 0, 0, Purpose::permutation});
    ASSERT_EQ(d.n(), 4u);
    ASSERT_EQ(d.d(), 2u);
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(strata(d, j), (std::set<std::size_t>{0, 1, 2, 3}));
    EXPECT_TRUE(is_latin(d));
}

TEST(DesignTest, RandomShapesAreLatin) {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const std::size_t n = 1 + s % 64;
        const std::size_t dim = 1 + s % 10;
        const auto d = generate(Method::lhs, n, dim, {s, s, 0, Purpose::permutation});
        ASSERT_TRUE(is_latin(d)) << "seed " << s;
    }
}

TEST(DesignTest, SingleRowInUnitCube) {
    const auto d = generate(Method::lhs, 1, 5, {3, 0, 0, Purpose::permutation});
    ASSERT_EQ(d.n(), 1u);
    for (std::size_t j = 0; j < 5; ++j) {
        EXPECT_GE(d(0, j), 0.0);
        EXPECT_LT(d(0, j), 1.0);
    }
}

TEST(DesignTest, StratumPointEdges) {
    EXPECT_EQ(std::floor(stratum_point(3, std::nextafter(1.0, 0.0), 7) * 7), 3.0);
    EXPECT_EQ(stratum_point(1, 0.0, 4), 0.25);
    EXPECT_LT(stratum_point(3, std::nextafter(1.0, 0.0), 4), 1.0);
}

TEST(DesignTest, IidMoments) {
    const auto d = generate(Method::iid, 100000, 1, {5, 0, 0, Purpose::permutation});
    double m = 0, v = 0;
    for (std::size_t i = 0; i < d.n(); ++i) m += d(i, 0);
    m /= d.n();
    for (std::size_t i = 0; i < d.n(); ++i) v += (d(i, 0) - m) * (d(i, 0) - m);
    v /= d.n() - 1;
    EXPECT_NEAR(m, 0.5, 0.004);
    EXPECT_NEAR(v, 1.0 / 12.0, 0.002);
}

TEST(DesignTest, IidIsUsuallyNotLatin) {
    EXPECT_FALSE(is_latin(generate(Method::iid, 50, 2, {1, 0, 0, Purpose::permutation})));
}

TEST(DesignTest, Deterministic) {
    const StreamKey k{123, 4, 0, Purpose::permutation};
    EXPECT_EQ(generate(Method::lhs, 30, 3, k).points(), generate(Method::lhs, 30, 3, k).points());
}

TEST(DesignTest, ZeroSizesRejected) {
    EXPECT_THROW(generate(Method::lhs, 0, 2, {}), Error);
    EXPECT_THROW(generate(Method::lhs, 2, 0, {}), Error);
}

TEST(DesignTest, MethodNames) {
    EXPECT_EQ(parse_method("lhs"), Method::lhs);
    EXPECT_EQ(parse_method("iid"), Method::iid);
    EXPECT_EQ(to_string(Method::lhs), "lhs");
    EXPECT_THROW(parse_method("sobol"), Error);
}

// Var of the LHS mean of x in d=1 is 1/(12 n^3); IID gives 1/(12 n).
TEST(DesignTest, MeanVarianceLaw) {
    for (std::size_t n : {4u, 16u}) {
        const int reps = 20000;
        double s = 0, s2 = 0, t = 0, t2 = 0;
        for (int r = 0; r < reps; ++r) {
            const StreamKey k{99, static_cast<std::uint64_t>(r), 0, Purpose::permutation};
            const auto l = generate(Method::lhs, n, 1, k).points().mean();
            const auto i = generate(Method::iid, n, 1, k).points().mean();
            s += l;
            s2 += l * l;
            t += i;
            t2 += i * i;
        }
        const double vl = (s2 - s * s / reps) / (reps - 1);
        const double vi = (t2 - t * t / reps) / (reps - 1);
        const double nn = static_cast<double>(n);
        EXPECT_NEAR(vl / (1.0 / (12 * nn * nn * nn)), 1.0, 0.06) << n;
        EXPECT_NEAR(vi / (1.0 / (12 * nn)), 1.0, 0.06) << n;
    }
}

// The closed form above, checked by summing over strata: the stratum-k point
// is (k + v)/n with v uniform, so Var(mean) = n * (1/n^2) * Var(v/n) = 1/(12 n^3).
TEST(DesignTest, MeanVarianceClosedFormByQuadrature) {
    for (std::size_t n : {4u, 16u}) {
        const int grid = 4000;
        double var_point = 0.0;
        for (int g = 0; g < grid; ++g) {
            const double v = (g + 0.5) / grid;
            const double x = stratum_point(0, v, n);
            var_point += (x - 0.5 / n) * (x - 0.5 / n) / grid;
        }
        const double nn = static_cast<double>(n);
        EXPECT_NEAR(var_point / nn, 1.0 / (12 * nn * nn * nn), 1e-6 / (nn * nn * nn));
    }
}

TEST(TransformTest, IdentityUnchanged) {
    const auto d = generate(Method::lhs, 10, 2, {1, 0, 0, Purpose::permutation});
    const std::vector<Marginal> m{identity_marginal(), identity_marginal()};
    EXPECT_EQ(transform(d, m).points(), d.points());
}

TEST(TransformTest, LinearScaling) {
    const auto d = generate(Method::lhs, 5000, 1, {2, 0, 0, Purpose::permutation});
    const std::vector<Marginal> m{uniform_marginal(0.0, 2.0)};
    const auto t = transform(d, m);
    for (std::size_t i = 0; i < t.n(); ++i) {
        EXPECT_GE(t(i, 0), 0.0);
        EXPECT_LT(t(i, 0), 2.0);
    }
    EXPECT_NEAR(t.points().mean(), 1.0, 1e-3);
}

TEST(TransformTest, NormalMarginalMoments) {
    double m = 0, v = 0;
    const int reps = 1000;
    const std::vector<Marginal> marg{normal_marginal()};
    for (int r = 0; r < reps; ++r) {
        const auto t = transform(generate(Method::lhs, 100, 1, {4, static_cast<std::uint64_t>(r), 0, Purpose::permutation}), marg);
        const double mean = t.points().mean();
        m += mean;
        v += (t.points().array() - mean).square().sum() / 99.0;
    }
    EXPECT_NEAR(m / reps, 0.0, 0.05);
    EXPECT_NEAR(v / reps, 1.0, 0.1);
}

TEST(TransformTest, DecreasingQuantileRejected) {
    const auto d = generate(Method::lhs, 4, 1, {1, 0, 0, Purpose::permutation});
    const std::vector<Marginal> m{{"flip", [](double u) { return 1.0 - u; }}};
    try {
        transform(d, m);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::non_monotone_quantile);
    }
}

TEST(TransformTest, MarginalCountMustMatch) {
    const auto d = generate(Method::lhs, 4, 2, {1, 0, 0, Purpose::permutation});
    const std::vector<Marginal> m{identity_marginal()};
    EXPECT_THROW(transform(d, m), Error);
}

}  // namespace
}  // namespace lhsz

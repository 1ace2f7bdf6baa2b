// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lhsz/errors.hpp"
#include "lhsz/harness.hpp"
#include "lhsz/models.hpp"
#include "lhsz/parallel.hpp"

#include <cmath>

namespace lhsz {
namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.model = "poisson-log-d9";
    c.sizes = {40};
    c.replications = 2;
    c.seed = 1;
    return c;
}

TEST(ConfigTest, Validation) {
    auto c = small_config();
    EXPECT_NO_THROW(validate(c));
    c.replications = 1;
    EXPECT_THROW(validate(c), Error);
    c = small_config();
    c.sizes = {};
    EXPECT_THROW(validate(c), Error);
    c = small_config();
    c.sizes = {50, 40};
    EXPECT_THROW(validate(c), Error);
    c = small_config();
    c.sizes = {0};
    EXPECT_THROW(validate(c), Error);
    c = small_config();
    c.methods = {};
    EXPECT_THROW(validate(c), Error);
}

TEST(ReplicateKeyTest, DistinctPerCell) {
    const auto a = replicate_key(1, Method::lhs, 40, 0);
    EXPECT_FALSE(a == replicate_key(1, Method::iid, 40, 0));
    EXPECT_FALSE(a == replicate_key(1, Method::lhs, 50, 0));
    EXPECT_FALSE(a == replicate_key(1, Method::lhs, 40, 1));
    EXPECT_TRUE(a == replicate_key(1, Method::lhs, 40, 0));
}

TEST(ReplicateDataTest, StratifiedAuxIsLatin) {
    const auto m = make_model("poisson-log-d1");
    const auto data = replicate_data(m, Method::lhs, 64, replicate_key(3, Method::lhs, 64, 0), true);
    RowMatrix full(64, 2);
    full.col(0) = data.design.points().col(0);
    for (std::size_t i = 0; i < 64; ++i) full(static_cast<Eigen::Index>(i), 1) = data.aux[i];
    EXPECT_TRUE(is_latin(DesignMatrix(full, Method::lhs, {})));
}

TEST(SweepTest, SmokeTableIsComplete) {
    const auto t = run_sweep(small_config());
    EXPECT_EQ(t.rows.size(), 2u * 9u);
    EXPECT_EQ(t.cells.size(), 2u);
    for (const auto& r : t.rows) {
        EXPECT_EQ(r.mse, r.variance + r.squared_bias);
        EXPECT_EQ(r.replications, 2u);
        EXPECT_EQ(r.normalized_variance, 40.0 * r.variance);
    }
    EXPECT_NO_THROW(t.row(Method::iid, 40, 8));
    EXPECT_THROW(t.row(Method::iid, 41, 0), Error);
}

TEST(SweepTest, SummaryStatistics) {
    ReplicateSet cell;
    cell.n = 10;
    for (double v : {1.0, 2.0, 3.0, 6.0}) cell.estimates.push_back(Eigen::VectorXd::Constant(1, v));
    const auto rows = summarize(cell, Eigen::VectorXd::Constant(1, 2.0));
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].mean, 3.0);
    EXPECT_DOUBLE_EQ(rows[0].variance, 14.0 / 3.0);
    EXPECT_DOUBLE_EQ(rows[0].squared_bias, 1.0);
    EXPECT_DOUBLE_EQ(rows[0].normalized_variance, 140.0 / 3.0);
}

// Location estimator is the sample mean: LHS variance 1/(12 n^3), IID 1/(12 n).
TEST(SweepTest, LocationVarianceLaw) {
    const auto m = make_model("mean-d1");
    const std::size_t n = 16;
    const std::size_t L = 4000;
    const double nn = static_cast<double>(n);
    const auto lhs = summarize(run_replicates(m, Method::lhs, n, L, 5), m.truth);
    const auto iid = summarize(run_replicates(m, Method::iid, n, L, 5), m.truth);
    EXPECT_NEAR(lhs[0].variance * 12 * nn * nn * nn, 1.0, 0.1);
    EXPECT_NEAR(iid[0].variance * 12 * nn, 1.0, 0.1);
}

TEST(SweepTest, DeterministicAcrossWorkerCounts) {
    const auto m = make_model("poisson-log-d9");
    set_worker_count(1);
    const auto a = run_replicates(m, Method::lhs, 60, 8, 9);
    set_worker_count(3);
    const auto b = run_replicates(m, Method::lhs, 60, 8, 9);
    set_worker_count(std::thread::hardware_concurrency());
    ASSERT_EQ(a.estimates.size(), b.estimates.size());
    for (std::size_t i = 0; i < a.estimates.size(); ++i) EXPECT_EQ(a.estimates[i], b.estimates[i]);
}

TEST(SweepTest, ExcessiveFailuresReported) {
    const auto m = make_model("poisson-log-d9");
    SolveOptions o;
    o.max_iter = 1;
    try {
        run_replicates(m, Method::lhs, 200, 5, 1, false, o);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::excessive_failures);
    }
}

TEST(OracleTest, AdditiveScoreHasNoLhsVariance) {
    const auto o = asymptotic_oracle(make_model("additive-d2"), 20000, 2);
    EXPECT_LT(o.normalized_variances(0), 1e-3 * o.iid_covariance(0, 0));
    EXPECT_NEAR(o.iid_covariance(0, 0), 1.0 / 6.0, 0.01);
}

TEST(OracleTest, BudgetValidation) {
    EXPECT_THROW(asymptotic_oracle(make_model("mean-d1"), 9999, 1), Error);
}

// Oracle for the Gaussian model against the spread of directly replicated fits.
TEST(OracleTest, GaussianMatchesReplicationOracle) {
    const auto m = make_model("gaussian-identity-d2");
    const auto o = asymptotic_oracle(m, 100000, 4);
    const std::size_t n = 4096;
    const auto rows = summarize(run_replicates(m, Method::lhs, n, 10000, 4), m.truth);
    for (std::size_t j = 0; j < 2; ++j) {
        EXPECT_NEAR(rows[j].normalized_variance / o.normalized_variances(static_cast<Eigen::Index>(j)), 1.0, 0.1) << j;
    }
}

TEST(QQTest, TableShape) {
    std::vector<Eigen::VectorXd> est;
    for (int i = 0; i < 50; ++i) est.push_back(Eigen::VectorXd::Constant(2, std::sin(i)));
    const auto t = qq_from_estimates(est, Eigen::VectorXd::Zero(2), 100, Standardization::empirical);
    ASSERT_EQ(t.columns.size(), 2u);
    for (const auto& c : t.columns) {
        ASSERT_EQ(c.empirical.size(), 50u);
        ASSERT_EQ(c.probabilities.size(), 50u);
        for (std::size_t i = 0; i < 50; ++i) EXPECT_DOUBLE_EQ(c.probabilities[i], (i + 0.5) / 50.0);
        EXPECT_TRUE(std::is_sorted(c.empirical.begin(), c.empirical.end()));
        EXPECT_TRUE(std::is_sorted(c.normal_quantiles.begin(), c.normal_quantiles.end()));
    }
}

TEST(QQTest, OracleStandardizationNeedsVariances) {
    std::vector<Eigen::VectorXd> est(3, Eigen::VectorXd::Zero(1));
    EXPECT_THROW(qq_from_estimates(est, Eigen::VectorXd::Zero(1), 10, Standardization::oracle), Error);
    EXPECT_THROW(qq_from_estimates(std::span(est).first(1), Eigen::VectorXd::Zero(1), 10, Standardization::empirical),
                 Error);
}

TEST(QQTest, MinimumReplications) {
    EXPECT_THROW(qq_data(make_model("mean-d1"), 10, 49, 1, Standardization::empirical), Error);
}

TEST(QQTest, SampleMeanIsNormal) {
    const auto t = qq_data(make_model("mean-d1"), 1000, 400, 3, Standardization::empirical, nullptr, Method::iid);
    EXPECT_GE(t.columns[0].correlation, 0.995);
    EXPECT_EQ(t.replications, 400u);
}

TEST(CorrelationTest, Basics) {
    const std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8}, c{4, 3, 2, 1};
    EXPECT_NEAR(correlation(a, b), 1.0, 1e-15);
    EXPECT_NEAR(correlation(a, c), -1.0, 1e-15);
}

}  // namespace
}  // namespace lhsz

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "lhsz/errors.hpp"
#include "lhsz/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lhsz {
namespace {

TEST(StreamTest, SameKeySameValues) {
    const StreamKey k{42, 3, 1, Purpose::jitter};
    EXPECT_EQ(uniform_stream(k, 3), uniform_stream(k, 3));
}

TEST(StreamTest, PrefixStable) {
    const StreamKey k{9, 0, 0, Purpose::response};
    const auto a = uniform_stream(k, 10);
    const auto b = uniform_stream(k, 4);
    EXPECT_TRUE(std::equal(b.begin(), b.end(), a.begin()));
}

TEST(StreamTest, ValuesInUnitInterval) {
    for (double u : uniform_stream({1, 2, 3, Purpose::oracle}, 10000)) {
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(StreamTest, MeanNearHalf) {
    const auto u = uniform_stream({7, 0, 0, Purpose::permutation}, 100000);
    const double mean = std::accumulate(u.begin(), u.end(), 0.0) / u.size();
    EXPECT_NEAR(mean, 0.5, 0.005);
}

TEST(StreamTest, PurposesUncorrelated) {
    const StreamKey k{11, 5, 2, Purpose::permutation};
    const std::size_t n = 100000;
    const auto a = uniform_stream(k, n);
    const auto b = uniform_stream(k.with_purpose(Purpose::jitter), n);
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    EXPECT_NEAR(sab / std::sqrt(saa * sbb), 0.0, 0.01);
}

TEST(StreamTest, KeysDifferInEveryField) {
    const StreamKey base{1, 2, 3, Purpose::permutation};
    const auto ref = uniform_stream(base, 4);
    EXPECT_NE(ref, uniform_stream(StreamKey{2, 2, 3, Purpose::permutation}, 4));
    EXPECT_NE(ref, uniform_stream(base.with_replication(9), 4));
    EXPECT_NE(ref, uniform_stream(base.with_column(4), 4));
    EXPECT_NE(ref, uniform_stream(base.with_purpose(Purpose::oracle), 4));
}

TEST(StreamTest, ZeroCountRejected) {
    EXPECT_THROW(uniform_stream({}, 0), Error);
}

TEST(StreamTest, BoundedDrawsInRange) {
    Stream s(StreamKey{3, 0, 0, Purpose::permutation});
    std::vector<int> hits(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto v = s.next_below(7);
        ASSERT_LT(v, 7u);
        ++hits[v];
    }
    for (int h : hits) EXPECT_NEAR(h, 10000, 400);
}

TEST(PermutationTest, SingleElement) {
    EXPECT_EQ(random_permutation({5, 0, 0, Purpose::permutation}, 1), std::vector<std::size_t>{1});
}

TEST(PermutationTest, IsBijection) {
    auto p = random_permutation({5, 1, 0, Purpose::permutation}, 500);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> expect(500);
    std::iota(expect.begin(), expect.end(), 1);
    EXPECT_EQ(p, expect);
}

TEST(PermutationTest, ZeroRejected) {
    try {
        random_permutation({}, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
}

// Chi-square over the 24 orderings of 4 elements.
TEST(PermutationTest, UniformOverAllOrderings) {
    std::map<std::vector<std::size_t>, int> counts;
    const int reps = 24000;
    for (int r = 0; r < reps; ++r) {
        ++counts[random_permutation(StreamKey{77, static_cast<std::uint64_t>(r), 0, Purpose::permutation}, 4)];
    }
    ASSERT_EQ(counts.size(), 24u);
    double chi2 = 0.0;
    for (const auto& [perm, c] : counts) {
        EXPECT_NEAR(c / double(reps), 1.0 / 24.0, 0.01);
        chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    }
    // 23 degrees of freedom, 0.999 quantile is 49.7
    EXPECT_LT(chi2, 49.7);
}

}  // namespace
}  // namespace lhsz

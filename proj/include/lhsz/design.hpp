// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "lhsz/rng.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lhsz {

enum class Method { lhs, iid };

std::string_view to_string(Method m) noexcept;
Method parse_method(std::string_view s);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// n x d sample with its provenance. Rows are contiguous so a row can be
/// handed to evaluators as a span.
class DesignMatrix {
public:
    DesignMatrix() = default;
    DesignMatrix(RowMatrix points, Method method, StreamKey seed)
        : points_(std::move(points)), method_(method), seed_(seed) {}

    std::size_t n() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(points_.cols()); }
    Method method() const noexcept { return method_; }
    const StreamKey& seed() const noexcept { return seed_; }
    const RowMatrix& points() const noexcept { return points_; }

    double operator()(std::size_t i, std::size_t j) const {
        return points_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    std::span<const double> row(std::size_t i) const {
        return {points_.data() + i * d(), d()};
    }

private:
    RowMatrix points_;
    Method method_ = Method::iid;
    StreamKey seed_{};
};

/// Generates an n x d design on [0,1)^d. Column j draws its permutation from
/// seed.with_column(j) under Purpose::permutation and its jitter under
/// Purpose::jitter; the purpose field of `seed` is ignored.
DesignMatrix generate(Method method, std::size_t n, std::size_t d, const StreamKey& seed);

/// Point in stratum k (0-based) of n: (k + v) / n for v in [0,1), clamped so
/// that floor(x * n) == k holds in floating point.
double stratum_point(std::size_t k, double v, std::size_t n) noexcept;

/// True when every column puts exactly one entry in each [k/n, (k+1)/n).
bool is_latin(const DesignMatrix& design);

struct Marginal {
    std::string label;
    std::function<double(double)> quantile;
};

Marginal identity_marginal();
Marginal uniform_marginal(double lo, double hi);
Marginal normal_marginal(double mean = 0.0, double sd = 1.0);

/// Applies Q_j entrywise. Throws NonMonotoneQuantile when some Q_j decreases
/// on a 1024-point probe grid of (0,1).
DesignMatrix transform(const DesignMatrix& design, std::span<const Marginal> marginals);

}  // namespace lhsz

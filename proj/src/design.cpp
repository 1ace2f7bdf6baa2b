// SPDX-License-Identifier: Apache-2.0
#include "lhsz/design.hpp"

#include "lhsz/errors.hpp"
#include "lhsz/normal.hpp"

#include <cmath>
#include <vector>

namespace lhsz {

std::string_view to_string(Method m) noexcept {
    return m == Method::lhs ? "lhs" : "iid";
}

Method parse_method(std::string_view s) {
    if (s == "lhs" || s == "LHS") return Method::lhs;
    if (s == "iid" || s == "IID") return Method::iid;
    throw Error(ErrorKind::invalid_argument, "unknown sampling method '" + std::string(s) + "'");
}

double stratum_point(std::size_t k, double v, std::size_t n) noexcept {
    const double kd = static_cast<double>(k);
    const double nd = static_cast<double>(n);
    double x = (kd + v) / nd;
    while (std::floor(x * nd) > kd) x = std::nextafter(x, 0.0);
    while (std::floor(x * nd) < kd) x = std::nextafter(x, 1.0);
    return x;
}

DesignMatrix generate(Method method, std::size_t n, std::size_t d, const StreamKey& seed) {
    if (n == 0 || d == 0) {
        throw Error(ErrorKind::invalid_argument, "generate: n and d must be >= 1");
    }
    RowMatrix pts(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
        const StreamKey col = seed.with_column(j);
        Stream jitter(col.with_purpose(Purpose::jitter));
        const auto cj = static_cast<Eigen::Index>(j);
        if (method == Method::lhs) {
            const auto perm = random_permutation(col.with_purpose(Purpose::permutation), n);
            for (std::size_t i = 0; i < n; ++i) {
                pts(static_cast<Eigen::Index>(i), cj) = stratum_point(perm[i] - 1, jitter.next_uniform(), n);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                pts(static_cast<Eigen::Index>(i), cj) = jitter.next_uniform();
            }
        }
    }
    return DesignMatrix(std::move(pts), method, seed);
}

bool is_latin(const DesignMatrix& design) {
    const std::size_t n = design.n();
    const double nd = static_cast<double>(n);
    std::vector<char> seen(n);
    for (std::size_t j = 0; j < design.d(); ++j) {
        std::fill(seen.begin(), seen.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = design(i, j);
            if (!(x >= 0.0 && x < 1.0)) return false;
            const auto k = static_cast<std::size_t>(std::floor(x * nd));
            if (k >= n || seen[k]) return false;
            seen[k] = 1;
        }
    }
    return true;
}

Marginal identity_marginal() {
    return {"identity", [](double u) { return u; }};
}

Marginal uniform_marginal(double lo, double hi) {
    return {"uniform", [lo, hi](double u) { return lo + (hi - lo) * u; }};
}

Marginal normal_marginal(double mean, double sd) {
    return {"normal", [mean, sd](double u) { return mean + sd * normal_quantile(u); }};
}

DesignMatrix transform(const DesignMatrix& design, std::span<const Marginal> marginals) {
    if (marginals.size() != design.d()) {
        throw Error(ErrorKind::invalid_argument, "transform: need one marginal per design column");
    }
    constexpr int probes = 1024;
    for (const auto& m : marginals) {
        double prev = m.quantile(0.5 / probes);
        for (int k = 1; k < probes; ++k) {
            const double cur = m.quantile((k + 0.5) / probes);
            if (cur < prev || !std::isfinite(cur)) {
                throw Error(ErrorKind::non_monotone_quantile,
                            "quantile '" + m.label + "' is not monotone/finite on the probe grid");
            }
            prev = cur;
        }
    }
    RowMatrix out = design.points();
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) {
            out(i, j) = marginals[static_cast<std::size_t>(j)].quantile(out(i, j));
        }
    }
    return DesignMatrix(std::move(out), design.method(), design.seed());
}

}  // namespace lhsz

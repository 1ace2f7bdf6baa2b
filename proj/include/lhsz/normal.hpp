// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace lhsz {

double normal_cdf(double x) noexcept;

/// Inverse standard-normal CDF: rational approximation polished with one
/// Halley step on the erfc-based CDF. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

}  // namespace lhsz

// SPDX-License-Identifier: Apache-2.0
#include "lhsz/errors.hpp"

namespace lhsz {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::invalid_argument: return "InvalidArgument";
        case ErrorKind::domain_error: return "DomainError";
        case ErrorKind::non_monotone_quantile: return "NonMonotoneQuantile";
        case ErrorKind::non_finite_value: return "NonFiniteValue";
        case ErrorKind::degenerate_decomposition: return "DegenerateDecomposition";
        case ErrorKind::singular_jacobian: return "SingularJacobian";
        case ErrorKind::non_psd_input: return "NonPSDInput";
        case ErrorKind::link_domain_violation: return "LinkDomainViolation";
        case ErrorKind::excessive_failures: return "ExcessiveFailures";
        case ErrorKind::io_error: return "IOError";
    }
    return "Error";
}

bool is_numerical(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::non_finite_value:
        case ErrorKind::degenerate_decomposition:
        case ErrorKind::singular_jacobian:
        case ErrorKind::non_psd_input:
        case ErrorKind::link_domain_violation:
        case ErrorKind::excessive_failures:
            return true;
        default:
            return false;
    }
}

}  // namespace lhsz

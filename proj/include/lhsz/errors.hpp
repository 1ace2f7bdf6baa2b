// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lhsz {

enum class ErrorKind {
    invalid_argument,
    domain_error,
    non_monotone_quantile,
    non_finite_value,
    degenerate_decomposition,
    singular_jacobian,
    non_psd_input,
    link_domain_violation,
    excessive_failures,
    io_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Numerical failures map to CLI exit code 2, everything else to 1.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace lhsz

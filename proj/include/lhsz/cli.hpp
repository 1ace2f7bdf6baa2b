// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace lhsz::cli {

/// `start:stop:step` (stop included when aligned), a comma list, or a single
/// value. Throws InvalidArgument on malformed input.
std::vector<std::size_t> parse_range(std::string_view text);

/// Entry point behind the `lhsz` executable. Returns 0 on success, 1 on
/// validation errors and 2 on numerical failures.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lhsz::cli

// SPDX-License-Identifier: Apache-2.0
#include "lhsz/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return lhsz::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr);
}

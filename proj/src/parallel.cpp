// SPDX-License-Identifier: Apache-2.0
#include "lhsz/parallel.hpp"

namespace lhsz {
namespace {
std::atomic<std::size_t> configured_workers{0};
}

void set_worker_count(std::size_t workers) noexcept { configured_workers.store(workers); }

std::size_t worker_count() noexcept {
    const std::size_t w = configured_workers.load();
    if (w > 0) return w;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace lhsz

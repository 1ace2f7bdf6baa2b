// SPDX-License-Identifier: Apache-2.0
#include "lhsz/rng.hpp"

#include "lhsz/errors.hpp"

#include <numeric>

namespace lhsz {

std::string_view to_string(Purpose p) noexcept {
    switch (p) {
        case Purpose::permutation: return "permutation";
        case Purpose::jitter: return "jitter";
        case Purpose::response: return "response";
        case Purpose::oracle: return "oracle";
    }
    return "unknown";
}

std::uint64_t combine_ids(std::initializer_list<std::uint64_t> ids) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (auto id : ids) h = mix64(h ^ mix64(id + 0x9e3779b97f4a7c15ULL));
    return h;
}

Stream::Stream(const StreamKey& key) noexcept {
    std::uint64_t h = mix64(key.master_seed ^ 0x243f6a8885a308d3ULL);
    h = mix64(h ^ mix64(key.replication_index + 0x13198a2e03707344ULL));
    h = mix64(h ^ mix64(key.column_index + 0xa4093822299f31d0ULL));
    h = mix64(h ^ mix64(static_cast<std::uint64_t>(key.purpose) + 0x082efa98ec4e6c89ULL));
    state_ = h;
}

std::uint64_t Stream::next_below(std::uint64_t bound) noexcept {
    // bound >= 1
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = -bound % bound;
        while (low < threshold) {
            m = static_cast<__uint128_t>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::vector<double> uniform_stream(const StreamKey& key, std::size_t count) {
    if (count == 0) throw Error(ErrorKind::invalid_argument, "uniform_stream: count must be >= 1");
    Stream s(key);
    std::vector<double> out(count);
    for (auto& v : out) v = s.next_uniform();
    return out;
}

std::vector<std::size_t> random_permutation(const StreamKey& key, std::size_t n) {
    if (n == 0) throw Error(ErrorKind::invalid_argument, "random_permutation: n must be >= 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{1});
    Stream s(key);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(s.next_below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

}  // namespace lhsz

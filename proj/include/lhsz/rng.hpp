// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace lhsz {

enum class Purpose : std::uint8_t { permutation, jitter, response, oracle };

std::string_view to_string(Purpose p) noexcept;

/// Identifies one independent random stream. The stream state is a hash of
/// all four fields, so streams can be created in any order on any thread.
struct StreamKey {
    std::uint64_t master_seed = 0;
    std::uint64_t replication_index = 0;
    std::uint64_t column_index = 0;
    Purpose purpose = Purpose::permutation;

    StreamKey with_column(std::uint64_t column) const noexcept {
        StreamKey k = *this;
        k.column_index = column;
        return k;
    }
    StreamKey with_purpose(Purpose p) const noexcept {
        StreamKey k = *this;
        k.purpose = p;
        return k;
    }
    StreamKey with_replication(std::uint64_t rep) const noexcept {
        StreamKey k = *this;
        k.replication_index = rep;
        return k;
    }

    friend bool operator==(const StreamKey&, const StreamKey&) = default;
};

/// 64-bit finalizer (splitmix64 / Stafford variant 13).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Order-sensitive hash of a tuple of integers; used to build replication
/// indices from (cell, replicate) pairs.
std::uint64_t combine_ids(std::initializer_list<std::uint64_t> ids) noexcept;

/// Counter-based generator: output i is mix64(state + (i+1) * golden).
/// Value type; copying a stream copies its position.
class Stream {
public:
    explicit Stream(const StreamKey& key) noexcept;

    std::uint64_t next_u64() noexcept {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_ + counter_);
    }

    /// Uniform on [0,1) with 53 random bits.
    double next_uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, bound), Lemire's multiply-shift with rejection.
    std::uint64_t next_below(std::uint64_t bound) noexcept;

private:
    std::uint64_t state_;
    std::uint64_t counter_ = 0;
};

std::vector<double> uniform_stream(const StreamKey& key, std::size_t count);

/// Uniformly random permutation of {1, ..., n} (Fisher-Yates).
std::vector<std::size_t> random_permutation(const StreamKey& key, std::size_t n);

}  // namespace lhsz

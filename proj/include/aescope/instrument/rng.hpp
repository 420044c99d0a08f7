#pragma once

#include <cstdint>
#include <random>

namespace aescope::instrument {

/// Independent reproducible engine per (seed, stream, counter) triple.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(counter),
                      static_cast<std::uint32_t>(counter >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace aescope::instrument

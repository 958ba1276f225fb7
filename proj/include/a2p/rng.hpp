#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace a2p {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Keyed counter construction: the seed of stream `index` under a master
/// seed.  For a fixed master the map index -> seed is injective, so streams
/// never collide, and the value depends only on (master, index), never on
/// scheduling order.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
    return mix64(mix64(master) ^ (0xD1B54A32D192ED03ULL * (index + 1)));
}

/// Engine for one sample stream plus its provenance label.
struct RngStream {
    std::mt19937_64 engine;
    std::string path;

    RngStream(std::uint64_t master, std::uint64_t index)
        : engine(derive_stream(master, index)),
          path("master:" + std::to_string(master) + "/stream:" + std::to_string(index)) {}
};

}  // namespace a2p

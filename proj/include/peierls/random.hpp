#pragma once

// Counter-based random streams.  A stream is a pure function of a key tuple,
// so the same key yields the same draws regardless of query order.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace peierls {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Hashes a sequence of signed integers into a 64-bit stream key.
inline std::uint64_t stream_key(std::initializer_list<std::int64_t> parts) {
    std::uint64_t h = 0x243f6a8885a308d3ULL;
    for (auto p : parts) h = splitmix64(h ^ splitmix64(static_cast<std::uint64_t>(p)));
    return h;
}

/// Domain tags keep independent uses of one master seed apart.
enum class StreamDomain : std::int64_t {
    FieldTile = 1,
    InitialLifetime = 2,
    Replica = 3,
    Branching = 4,
    Replacement = 5,
    Experiment = 6,
};

/// SplitMix64 sequence; satisfies UniformRandomBitGenerator.
class StreamRng {
public:
    using result_type = std::uint64_t;

    explicit StreamRng(std::uint64_t key) : state_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Seed of replica `index` under a master seed.
inline std::uint64_t replica_seed(std::uint64_t master, std::int64_t index) {
    return stream_key({static_cast<std::int64_t>(StreamDomain::Replica), static_cast<std::int64_t>(master), index});
}

}  // namespace peierls

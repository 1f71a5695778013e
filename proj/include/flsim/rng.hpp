#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace flsim {

/// SplitMix64 finalizer. Used to derive independent stream seeds from keys.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds a key tuple into one 64-bit stream id. Order matters.
constexpr std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (auto p : parts) {
        h = mix64(h ^ mix64(p));
    }
    return h;
}

/// Stream domain tags, so that e.g. interference and network draws for the
/// same (seed, round, device) never share a generator.
enum class Stream : std::uint64_t {
    Interference = 1,
    Network = 2,
    Selection = 3,
    Exploration = 4,
    Shuffle = 5,
    Cluster = 6,
    Partition = 7,
    Dataset = 8,
    ModelInit = 9,
    QInit = 10,
    Baseline = 11,
};

/// A fresh generator whose sequence is a pure function of the key.
inline std::mt19937_64 keyed_engine(std::initializer_list<std::uint64_t> parts) {
    return std::mt19937_64(stream_key(parts));
}

inline std::mt19937_64 keyed_engine(Stream stream, std::uint64_t seed, std::uint64_t a = 0,
                                    std::uint64_t b = 0) {
    return keyed_engine({static_cast<std::uint64_t>(stream), seed, a, b});
}

/// Uniform double in [0, 1) with 53 bits, independent of libstdc++'s
/// generate_canonical so values are stable for a given engine output.
inline double unit_double(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace flsim

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace relsym {

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Derive the seed of an independent named substream.
inline std::uint64_t stream_seed(std::uint64_t seed, std::string_view name) {
    return splitmix64(seed ^ splitmix64(fnv1a64(name)));
}

/// Deterministic random source. Uses std::mt19937_64 (fully specified by the
/// standard) with hand-rolled value mappings, so sequences are reproducible
/// across platforms and standard library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    static Rng stream(std::uint64_t seed, std::string_view name) {
        return Rng(stream_seed(seed, name));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform draw strictly inside (0, 1), 53-bit resolution.
    double uniform01() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Unbiased integer in [0, n) via rejection sampling.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t rem = (UINT64_MAX % n + 1) % n; // 2^64 mod n
        const std::uint64_t bound = UINT64_MAX - rem;
        std::uint64_t x = engine_();
        while (rem != 0 && x > bound) x = engine_();
        return x % n;
    }

    bool coin() { return (engine_() & 1ull) != 0; }

    /// Standard Gumbel draw, -log(-log(U)).
    double gumbel() { return -std::log(-std::log(uniform01())); }

private:
    std::mt19937_64 engine_;
};

/// Deterministic Fisher-Yates shuffle (std::shuffle is implementation-defined).
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_index(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace relsym

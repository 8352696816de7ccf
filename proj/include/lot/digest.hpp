#pragma once

// Stable 64-bit digests and seed derivation. std::hash is not guaranteed
// stable across implementations, so manifests and config digests use FNV-1a.

#include <cstdint>
#include <string>
#include <string_view>

namespace lot {

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string hex_digest(std::string_view data) {
    return to_hex(fnv1a64(data));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Phase-level seed derived from one root seed; stable across runs and
/// platforms so a single knob controls full-run determinism.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view scope) {
    return splitmix64(root ^ fnv1a64(scope));
}

} // namespace lot

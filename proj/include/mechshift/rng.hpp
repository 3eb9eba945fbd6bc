// Copyright 2026 The mechshift authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MECHSHIFT_RNG_HPP
#define MECHSHIFT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace mechshift {

/// FNV-1a hash, used for keying RNG substreams by variable name and for
/// content hashes in run manifests.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

// SplitMix64 finalizer (Vigna). Full-avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based substream generator.
///
/// A substream is keyed by (seed, row, key); draws within the substream are
/// sequential SplitMix64 outputs. Keying mask/grid draws by the variable's
/// name hash means adding variables to a graph leaves the draws of existing
/// variables untouched, and sampling rows in parallel reproduces the
/// sequential output bit for bit.
class SubstreamRng {
public:
    SubstreamRng(std::uint64_t seed, std::uint64_t row, std::uint64_t key)
        : state_(detail::mix64(detail::mix64(seed ^ 0x8f1bbcdcbfa53e0bULL) ^
                               detail::mix64(row * 0xd6e8feb86659fd93ULL)) ^
                 detail::mix64(key)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (two uniforms per draw, no caching so
    /// the draw count per variable stays predictable).
    double next_normal() {
        double u1 = next_uniform();
        double u2 = next_uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    bool next_bernoulli(double p) { return next_uniform() < p; }

private:
    std::uint64_t state_;
};

/// Derives a child seed for a named pipeline stage from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose) {
    return detail::mix64(master ^ fnv1a(purpose));
}

}  // namespace mechshift

#endif

// radiomap - indoor radio map construction and trajectory recovery toolkit
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef RADIOMAP_RNG_HPP
#define RADIOMAP_RNG_HPP

#include <cstdint>
#include <random>

namespace rmap
{

// splitmix64 finalizer, used to derive independent substreams from one seed.
inline std::uint64_t mix_seed(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b)
{
    return mix_seed(mix_seed(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c)
{
    return mix_seed(mix_seed(a, b) ^ c);
}

// Named substream tags so every consumer of the master seed draws from its
// own independent stream.
namespace stream
{
constexpr std::uint64_t trajectory = 0x01;
constexpr std::uint64_t path_phase = 0x02;
constexpr std::uint64_t noise = 0x03;
constexpr std::uint64_t init = 0x04;
} // namespace stream

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(mix_seed(seed)); }

// Substream for a (slot, ap) pair under a tagged master seed.
inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t tag, std::uint64_t t, std::uint64_t q)
{
    return std::mt19937_64(mix_seed(mix_seed(seed, tag), t, q + 1));
}

} // namespace rmap

#endif

/*
   Copyright 2026 The postsel Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Hidden variables of the model: four independent input phases, and the
// "half a photon per mode" seed field built from them.

#include <array>
#include <cmath>
#include <cstdint>

#include "postsel/field.hpp"
#include "postsel/philox.hpp"

namespace postsel {

// Disjoint counter domains so unrelated draws never share random bits.
enum class Stream : std::uint32_t {
    phases = 0,
    coin = 1,
    polarizer = 2,
    alpha = 3,
};

struct SeedSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t sample_index = 0;
};

struct HiddenPhases {
    std::array<double, 4> delta{};
};

// Random block for (seed, index) in a given stream. `block` selects among
// independent 128-bit blocks belonging to the same index.
inline Philox4x32::Counter random_block(SeedSpec seed, Stream stream, std::uint32_t block = 0)
{
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed.master_seed),
                              static_cast<std::uint32_t>(seed.master_seed >> 32)};
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(seed.sample_index),
                                  static_cast<std::uint32_t>(seed.sample_index >> 32), block,
                                  static_cast<std::uint32_t>(stream)};
    return Philox4x32::block(ctr, key);
}

// Uniform angle in [0, 2pi).
inline double uniform_angle(std::uint32_t hi, std::uint32_t lo)
{
    const double a = uniform01(hi, lo) * two_pi;
    return a < two_pi ? a : 0.0;
}

inline HiddenPhases sample_phases(SeedSpec seed)
{
    const auto b0 = random_block(seed, Stream::phases, 0);
    const auto b1 = random_block(seed, Stream::phases, 1);
    return {{uniform_angle(b0[0], b0[1]), uniform_angle(b0[2], b0[3]),
             uniform_angle(b1[0], b1[1]), uniform_angle(b1[2], b1[3])}};
}

// Per-point / per-run seed derivation. Index 0 returns the parent seed, and
// distinct indices give distinct Philox keys (odd Weyl increment).
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index)
{
    return parent + index * 0x9E3779B97F4A7C15ull;
}

template <typename Scalar = double>
FieldState<Scalar> make_input(const HiddenPhases& phases)
{
    using std::cos;
    using std::sin;
    using std::sqrt;
    FieldState<Scalar> f;
    const Scalar r = sqrt(Scalar(0.5));
    for (int k = 0; k < 4; ++k) {
        const Scalar d = static_cast<Scalar>(phases.delta[k]);
        f.modes(k) = Amplitude<Scalar>(r * cos(d), r * sin(d));
    }
    f.stage = Stage::initial;
    return f;
}

} // namespace postsel

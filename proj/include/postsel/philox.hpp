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

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Stateless: a 128-bit counter and 64-bit key map to 128 random bits. Any
// (key, counter) pair can be evaluated independently of every other, so
// streams split across threads without coordination.

#include <array>
#include <cstdint>

namespace postsel {

class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr int rounds = 10;

    static constexpr Counter block(Counter ctr, Key key)
    {
        ctr = round(ctr, key);
        for (int r = 1; r < rounds; ++r) {
            key[0] += kW0;
            key[1] += kW1;
            ctr = round(ctr, key);
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static constexpr Counter round(const Counter& c, const Key& k)
    {
        const std::uint64_t p0 = std::uint64_t{kM0} * c[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }
};

// 53-bit uniform in [0, 1) from two 32-bit words.
constexpr double uniform01(std::uint32_t hi, std::uint32_t lo)
{
    const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;
    return static_cast<double>(bits) * 0x1.0p-53;
}

} // namespace postsel

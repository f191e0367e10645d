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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "postsel/sampling.hpp"

namespace postsel {
namespace {

// Known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswers)
{
    EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}),
              (Philox4x32::Counter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (Philox4x32::Counter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (Philox4x32::Counter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Philox, UniformRange)
{
    EXPECT_EQ(uniform01(0, 0), 0.0);
    EXPECT_LT(uniform01(0xffffffffu, 0xffffffffu), 1.0);
    EXPECT_LT(uniform_angle(0xffffffffu, 0xffffffffu), two_pi);
}

TEST(Sampling, DeterministicPerIndex)
{
    const SeedSpec s{42, 123456789};
    const auto a = sample_phases(s);
    const auto b = sample_phases(s);
    EXPECT_EQ(a.delta, b.delta);
    EXPECT_NE(a.delta, sample_phases({42, 123456790}).delta);
    EXPECT_NE(a.delta, sample_phases({43, 123456789}).delta);
}

TEST(Sampling, StreamsAreDisjoint)
{
    const SeedSpec s{1, 2};
    EXPECT_NE(random_block(s, Stream::phases), random_block(s, Stream::coin));
    EXPECT_NE(random_block(s, Stream::phases, 0), random_block(s, Stream::phases, 1));
}

TEST(Sampling, DeriveSeed)
{
    static_assert(derive_seed(99, 0) == 99);
    EXPECT_NE(derive_seed(99, 1), derive_seed(99, 2));
    EXPECT_NE(derive_seed(0, 1), 0u);
}

TEST(Sampling, InputHasHalfQuantumPerMode)
{
    const auto v = make_input<double>(HiddenPhases{{0.1, 1.0, 2.0, 5.0}}).modes;
    for (int k = 0; k < 4; ++k)
        EXPECT_NEAR(std::norm(v(k)), 0.5, 1e-15);
    EXPECT_NEAR(std::arg(v(3)), 5.0 - two_pi, 1e-14);
}

// Kolmogorov-Smirnov against U[0, 2pi) for each of the four phases;
// 1.9495 / sqrt(n) is the 0.001 critical value.
TEST(Sampling, PhasesAreUniform)
{
    const std::size_t n = 1'000'000;
    std::array<std::vector<double>, 4> cols;
    for (auto& c : cols)
        c.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto ph = sample_phases({2024, i});
        for (int k = 0; k < 4; ++k)
            cols[k].push_back(ph.delta[k] / two_pi);
    }
    const double critical = 1.9495 / std::sqrt(static_cast<double>(n));
    for (auto& c : cols) {
        std::sort(c.begin(), c.end());
        double d = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = c[i];
            d = std::max({d, static_cast<double>(i + 1) / n - x, x - static_cast<double>(i) / n});
        }
        EXPECT_LT(d, critical);
        EXPECT_GE(c.front(), 0.0);
        EXPECT_LT(c.back(), 1.0);
    }
}

} // namespace
} // namespace postsel

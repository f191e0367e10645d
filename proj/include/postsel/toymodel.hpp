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

// Two small contrast models.
//
// Coin toy: Alice and Bob each pick a setting bit and flip a fair coin; a
// third party keeps or discards each trial by a rule over all four bits.
// Selection alone manufactures correlations (collider bias).
//
// Polarizer demo: a photon with hidden polarization theta meets a polarizer
// at angle a with probability cos^2(theta - a) of passing. The pair
// {a, a + pi/2} is a complete measurement, so the summed detection
// probability is 1 for every theta and any two such sets sample lambda alike.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>

#include "postsel/error.hpp"

namespace postsel {

// ---------------------------------------------------------------------------
// Coin toy
// ---------------------------------------------------------------------------

struct CoinTrial {
    bool alice_setting = false;
    bool alice_outcome = false;
    bool bob_setting = false;
    bool bob_outcome = false;
    bool kept = false;

    // alpha | A << 1 | beta << 2 | B << 3
    unsigned pattern() const
    {
        return unsigned(alice_setting) | unsigned(alice_outcome) << 1 | unsigned(bob_setting) << 2 |
               unsigned(bob_outcome) << 3;
    }
};

using KeepRule = std::function<bool(const CoinTrial&)>;

// Keep rule given as a 16-bit set of kept patterns (see CoinTrial::pattern).
struct PatternRule {
    std::uint16_t keep_mask = 0xFFFF;
    bool operator()(const CoinTrial& t) const { return (keep_mask >> t.pattern()) & 1u; }
};

KeepRule keep_always();
KeepRule keep_alpha_equals_B();

struct ChshKeepRule {
    std::uint16_t keep_mask = 0;
    double S = 0.0;             // postselected CHSH value implied by the rule
    double keep_fraction = 0.0; // expected fraction of trials kept
};

// Exhaustive search over all 2^16 pattern subsets for the largest
// postselected CHSH value; ties go to the rule that keeps more trials, then
// to the smaller mask.
ChshKeepRule derive_chsh_keep_rule();

// CHSH value a pattern rule yields in expectation (every pattern has
// probability 1/16). Throws UndefinedError if a setting pair keeps nothing.
double expected_chsh(std::uint16_t keep_mask);

struct CoinToyStats {
    std::uint64_t n = 0;
    std::uint64_t kept = 0;
    double keep_rate = 0.0;

    double p_alpha_eq_B_kept = 0.0;
    double p_alpha_eq_B_all = 0.0;

    // Index alpha + 2*beta. E = <A*B> with outcomes mapped 0 -> +1, 1 -> -1.
    // A pair with no kept trials reports NaN.
    std::array<double, 4> correlators_kept{};
    std::array<double, 4> correlators_all{};
    std::array<double, 4> correlator_errs_all{};
    std::array<std::uint64_t, 4> pair_counts_kept{};
    std::array<std::uint64_t, 4> pair_counts_all{};
    double S_kept = 0.0;
    double S_all = 0.0;

    // P(B = 1 | alpha) for alpha = 0, 1.
    std::array<double, 2> p_B_given_alpha_kept{};
    std::array<double, 2> p_B_given_alpha_all{};
};

CoinTrial draw_coin_trial(std::uint64_t seed, std::uint64_t index);

CoinToyStats run_coin_toy(std::uint64_t n, const KeepRule& keep_rule, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Polarizer demo
// ---------------------------------------------------------------------------

struct PolarizerTrial {
    double theta = 0.0;
    double measurement_angle = 0.0;
    bool detected = false;
};

inline double detection_probability(double theta, double angle)
{
    const double c = std::cos(theta - angle);
    return c * c;
}

enum class ThetaPrior { uniform, fixed };

struct PolarizerConfig {
    std::uint64_t n = 1'000'000;
    ThetaPrior prior = ThetaPrior::uniform; // uniform on [0, pi)
    double theta0 = 0.0;                    // used by ThetaPrior::fixed
    double angle_M = 0.0;                   // set M = {angle_M, angle_M + pi/2}
    double angle_Mprime = 0.0;
    std::uint64_t seed = 0;
    bool sampled = false; // also draw detections, not just probabilities
};

struct PolarizerReport {
    std::uint64_t n = 0;
    double max_abs_sum_diff = 0.0; // max over theta |sum_M - sum_M'|
    double max_abs_sum_dev = 0.0;  // max over theta and both sets |sum - 1|
    std::uint64_t disagreements = 0; // (sum_M > 0) != (sum_M' > 0)
    double disagreement_fraction = 0.0;

    // Sampled mode: one uniform per theta decides which member of the set
    // clicks, so exactly one does.
    std::array<std::uint64_t, 2> sampled_counts_M{};
    std::array<std::uint64_t, 2> sampled_counts_Mprime{};
    std::uint64_t sampled_detected_M = 0;
    std::uint64_t sampled_detected_Mprime = 0;
};

PolarizerReport run_polarizer_demo(const PolarizerConfig& cfg);

} // namespace postsel

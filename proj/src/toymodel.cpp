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

#include "postsel/toymodel.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "postsel/error.hpp"
#include "postsel/sampling.hpp"

namespace postsel {

namespace {

constexpr unsigned pattern_of(unsigned alpha, unsigned a, unsigned beta, unsigned b)
{
    return alpha | a << 1 | beta << 2 | b << 3;
}

// CHSH combination over correlators indexed alpha + 2*beta.
constexpr double chsh_combination(const std::array<double, 4>& e)
{
    return e[0] + e[2] + e[1] - e[3];
}

} // namespace

KeepRule keep_always()
{
    return [](const CoinTrial&) { return true; };
}

KeepRule keep_alpha_equals_B()
{
    return [](const CoinTrial& t) { return t.alice_setting == t.bob_outcome; };
}

double expected_chsh(std::uint16_t keep_mask)
{
    std::array<double, 4> e{};
    for (unsigned alpha = 0; alpha < 2; ++alpha) {
        for (unsigned beta = 0; beta < 2; ++beta) {
            int kept = 0;
            int sum = 0;
            for (unsigned a = 0; a < 2; ++a)
                for (unsigned b = 0; b < 2; ++b)
                    if ((keep_mask >> pattern_of(alpha, a, beta, b)) & 1u) {
                        ++kept;
                        sum += a == b ? 1 : -1;
                    }
            if (kept == 0)
                throw UndefinedError("keep rule discards every trial of a setting pair");
            e[alpha + 2 * beta] = static_cast<double>(sum) / kept;
        }
    }
    return chsh_combination(e);
}

ChshKeepRule derive_chsh_keep_rule()
{
    ChshKeepRule best;
    best.S = -std::numeric_limits<double>::infinity();
    int best_kept = -1;
    for (unsigned mask = 0; mask <= 0xFFFFu; ++mask) {
        const auto m = static_cast<std::uint16_t>(mask);
        double s = 0.0;
        try {
            s = expected_chsh(m);
        } catch (const UndefinedError&) {
            continue;
        }
        const int kept = std::popcount(m);
        if (s > best.S || (s == best.S && kept > best_kept)) {
            best.keep_mask = m;
            best.S = s;
            best_kept = kept;
        }
    }
    best.keep_fraction = best_kept / 16.0;
    return best;
}

CoinTrial draw_coin_trial(std::uint64_t seed, std::uint64_t index)
{
    const std::uint32_t bits = random_block({seed, index}, Stream::coin)[0];
    CoinTrial t;
    t.alice_setting = bits & 1u;
    t.alice_outcome = (bits >> 1) & 1u;
    t.bob_setting = (bits >> 2) & 1u;
    t.bob_outcome = (bits >> 3) & 1u;
    return t;
}

CoinToyStats run_coin_toy(std::uint64_t n, const KeepRule& keep_rule, std::uint64_t seed)
{
    if (n < 1)
        throw ValidationError("coin toy needs n >= 1");
    if (!keep_rule)
        throw ValidationError("coin toy needs a keep rule");

    CoinToyStats st;
    st.n = n;
    std::array<std::int64_t, 4> prod_kept{}, prod_all{};
    std::array<std::uint64_t, 2> alpha_kept{}, alpha_all{}, b1_kept{}, b1_all{};
    std::uint64_t eq_kept = 0, eq_all = 0;

    for (std::uint64_t i = 0; i < n; ++i) {
        CoinTrial t = draw_coin_trial(seed, i);
        t.kept = keep_rule(t);
        const std::size_t pair = unsigned(t.alice_setting) + 2u * unsigned(t.bob_setting);
        const int ab = t.alice_outcome == t.bob_outcome ? 1 : -1;
        const bool eq = t.alice_setting == t.bob_outcome;

        ++st.pair_counts_all[pair];
        prod_all[pair] += ab;
        eq_all += eq;
        ++alpha_all[t.alice_setting];
        b1_all[t.alice_setting] += t.bob_outcome;
        if (t.kept) {
            ++st.kept;
            ++st.pair_counts_kept[pair];
            prod_kept[pair] += ab;
            eq_kept += eq;
            ++alpha_kept[t.alice_setting];
            b1_kept[t.alice_setting] += t.bob_outcome;
        }
    }
    if (st.kept == 0)
        throw UndefinedError("keep rule discarded every trial");

    const double nan = std::numeric_limits<double>::quiet_NaN();
    auto ratio = [nan](double num, std::uint64_t den) { return den ? num / static_cast<double>(den) : nan; };

    st.keep_rate = static_cast<double>(st.kept) / static_cast<double>(n);
    st.p_alpha_eq_B_kept = ratio(static_cast<double>(eq_kept), st.kept);
    st.p_alpha_eq_B_all = ratio(static_cast<double>(eq_all), n);
    for (std::size_t k = 0; k < 4; ++k) {
        st.correlators_kept[k] = ratio(static_cast<double>(prod_kept[k]), st.pair_counts_kept[k]);
        st.correlators_all[k] = ratio(static_cast<double>(prod_all[k]), st.pair_counts_all[k]);
        const double e = st.correlators_all[k];
        st.correlator_errs_all[k] = std::sqrt((1.0 - e * e) / static_cast<double>(st.pair_counts_all[k]));
    }
    st.S_kept = chsh_combination(st.correlators_kept);
    st.S_all = chsh_combination(st.correlators_all);
    for (std::size_t a = 0; a < 2; ++a) {
        st.p_B_given_alpha_kept[a] = ratio(static_cast<double>(b1_kept[a]), alpha_kept[a]);
        st.p_B_given_alpha_all[a] = ratio(static_cast<double>(b1_all[a]), alpha_all[a]);
    }
    return st;
}

PolarizerReport run_polarizer_demo(const PolarizerConfig& cfg)
{
    if (cfg.n < 1)
        throw ValidationError("polarizer demo needs n >= 1");
    constexpr double quarter_turn = std::numbers::pi / 2.0;

    PolarizerReport rep;
    rep.n = cfg.n;
    for (std::uint64_t i = 0; i < cfg.n; ++i) {
        const auto bits = random_block({cfg.seed, i}, Stream::polarizer);
        const double theta =
            cfg.prior == ThetaPrior::fixed ? cfg.theta0 : uniform01(bits[0], bits[1]) * std::numbers::pi;

        const std::array<double, 2> pm{detection_probability(theta, cfg.angle_M),
                                       detection_probability(theta, cfg.angle_M + quarter_turn)};
        const std::array<double, 2> pmp{detection_probability(theta, cfg.angle_Mprime),
                                        detection_probability(theta, cfg.angle_Mprime + quarter_turn)};
        const double sum_m = pm[0] + pm[1];
        const double sum_mp = pmp[0] + pmp[1];

        rep.max_abs_sum_diff = std::max(rep.max_abs_sum_diff, std::abs(sum_m - sum_mp));
        rep.max_abs_sum_dev = std::max({rep.max_abs_sum_dev, std::abs(sum_m - 1.0), std::abs(sum_mp - 1.0)});
        rep.disagreements += (sum_m > 0.0) != (sum_mp > 0.0);

        if (cfg.sampled) {
            const double u = uniform01(bits[2], bits[3]);
            const std::size_t km = u < pm[0] ? 0 : 1;
            const std::size_t kmp = u < pmp[0] ? 0 : 1;
            ++rep.sampled_counts_M[km];
            ++rep.sampled_counts_Mprime[kmp];
            ++rep.sampled_detected_M;
            ++rep.sampled_detected_Mprime;
        }
    }
    rep.disagreement_fraction = static_cast<double>(rep.disagreements) / static_cast<double>(rep.n);
    return rep;
}

} // namespace postsel

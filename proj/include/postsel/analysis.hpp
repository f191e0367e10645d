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

// Post-processing of ensembles: cosine fit of the joint-rate curve, rate
// normalization ("partition function" Z), CHSH on normalized rates, and the
// lambda-overlap diagnostics for Statistical Independence.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "postsel/field.hpp"
#include "postsel/montecarlo.hpp"

namespace postsel {

// ---------------------------------------------------------------------------
// Cosine fit:  p(x) = A * (2 + 2 cos x) + offset,  x = alpha + beta
// ---------------------------------------------------------------------------

struct CurvePoint {
    double phase_sum = 0.0;
    double p = 0.0;
    double std_err = 0.0;
};

struct CurveFit {
    double amplitude_A = 0.0;
    double offset = 0.0;
    double residual_rms = 0.0;

    double amplitude_err = 0.0;
    double offset_err = 0.0;
    double raw_offset = 0.0;     // least-squares offset before clamping
    bool offset_clamped = false; // raw offset was negative; refit with offset = 0
    bool weighted = true;        // false when some std_err was 0

    double model(double phase_sum) const
    {
        return amplitude_A * (2.0 + 2.0 * std::cos(phase_sum)) + offset;
    }
};

// Inverse-variance weighted least squares over (A, offset). Throws
// SingularFitError when the design is rank deficient (for instance all points
// at one phase sum) and ValidationError with fewer than 5 distinct phase sums.
CurveFit fit_cosine(std::span<const CurvePoint> curve);

std::vector<CurvePoint> joint_curve(std::span<const SweepResult> sweep);

// ---------------------------------------------------------------------------
// Complementary sets and normalization
// ---------------------------------------------------------------------------

struct ComplementarySet {
    Settings base;
    // (a, b), (a + pi, b), (a, b + pi), (a + pi, b + pi)
    std::array<Settings, 4> members;
};

ComplementarySet complementary_set(const Settings& base);

struct NormalizedProbability {
    double numerator_rate = 0.0;
    double partition_Z = 0.0;
    double p = 0.0;
};

// Z = sum of the four member rates, p = rates[which] / Z.
NormalizedProbability normalize_rates(const std::array<double, 4>& rates, std::size_t which);

// Joint rate normalized by the rate at which at least one side fires,
// with Z = P(III) + P(IV) - P(joint). That is the inclusion-exclusion
// count when the joint event is the overlap of the sides. Under the default
// any_mode side rule it is not, and stats.p_either() (the direct count of
// "III or IV") comes out smaller. Both are reported by the tools.
NormalizedProbability normalize_either_side(const EnsembleStats& stats);

// ---------------------------------------------------------------------------
// CHSH on complementary-set normalized joint rates
// ---------------------------------------------------------------------------

struct RateEstimate {
    double rate = 0.0;
    double std_err = 0.0;
};

struct Correlator {
    double value = 0.0;
    double std_err = 0.0;
    double partition_Z = 0.0;
};

// E = [N(a,b) + N(a+pi,b+pi) - N(a+pi,b) - N(a,b+pi)] / Z, with Z the sum of
// all four. Rates are in complementary_set member order. The error is
// first-order propagation assuming independent member estimates.
Correlator correlator(const std::array<RateEstimate, 4>& member_rates);

struct ChshQuad {
    double a = 0.0;
    double a_prime = 0.0;
    double b = 0.0;
    double b_prime = 0.0;
};

struct CHSHResult {
    ChshQuad quad;
    // E(a,b), E(a,b'), E(a',b), E(a',b')
    std::array<double, 4> correlators{};
    std::array<double, 4> correlator_errs{};
    double S = 0.0;
    double S_err = 0.0;
};

// The 16 settings a CHSH evaluation needs: four complementary sets, in
// correlator order, members in complementary_set order.
std::array<Settings, 16> chsh_settings(const ChshQuad& quad);

CHSHResult chsh(const ChshQuad& quad, const std::array<RateEstimate, 16>& rates);
CHSHResult chsh(const ChshQuad& quad, const std::function<RateEstimate(const Settings&)>& rate_of);

// Runs the 16 member ensembles (independent seeds, as in sweep) and evaluates.
CHSHResult chsh(const ChshQuad& quad, const EnsembleConfig& cfg);

// ---------------------------------------------------------------------------
// Statistical Independence diagnostics
// ---------------------------------------------------------------------------

// A lambda is "postselected under a set" when it gives a joint detection
// under at least one member. Per-member breakdowns are kept so narrower
// readings (seeding from a single member) can be read off directly.
struct SIOverlapReport {
    ComplementarySet set_M;
    ComplementarySet set_Mprime;
    std::uint64_t n = 0;
    std::uint64_t lambdas_M = 0;
    std::uint64_t lambdas_Mprime = 0;
    std::uint64_t lambdas_both = 0;
    double overlap_fraction = 0.0; // |M and M'| / |M|
    double reverse_fraction = 0.0; // |M and M'| / |M'|

    // member_count[k]: lambdas detected under member k of the set.
    // member_overlap[k]: those also postselected under the other set.
    std::array<std::uint64_t, 4> member_count_M{};
    std::array<std::uint64_t, 4> member_overlap_M{};
    std::array<std::uint64_t, 4> member_count_Mprime{};
    std::array<std::uint64_t, 4> member_overlap_Mprime{};

    double member_fraction_M(std::size_t k) const;
    double member_fraction_Mprime(std::size_t k) const;
};

// masks: bits 0..3 are the members of M, bits 4..7 the members of M'.
SIOverlapReport si_overlap(const ComplementarySet& M, const ComplementarySet& Mprime,
                           std::span<const std::uint32_t> masks);
SIOverlapReport si_overlap(const ComplementarySet& M, const ComplementarySet& Mprime,
                           const EnsembleConfig& cfg);

// histogram[c]: number of lambdas detected under exactly c members.
using MemberHistogram = std::array<std::uint64_t, 5>;

MemberHistogram member_detection_histogram(std::span<const std::uint32_t> masks, unsigned first_bit = 0);
MemberHistogram member_detection_histogram(const ComplementarySet& M, const EnsembleConfig& cfg);

struct CSetCheckReport {
    std::uint64_t n = 0;
    MemberHistogram histogram_M{};
    MemberHistogram histogram_Mprime{};
    std::uint64_t disagreements = 0;  // (count_M > 0) != (count_M' > 0)
    double disagreement_fraction = 0.0;
};

CSetCheckReport cset_condition_check(std::span<const std::uint32_t> masks);
CSetCheckReport cset_condition_check(const ComplementarySet& M, const ComplementarySet& Mprime,
                                     const EnsembleConfig& cfg);

// Settings in mask-bit order for the two sets: M members then M' members.
std::array<Settings, 8> paired_settings(const ComplementarySet& M, const ComplementarySet& Mprime);

} // namespace postsel

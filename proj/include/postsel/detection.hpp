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

// Threshold detection on the final field.
//
// A mode "clicks" when its amplitude lies in [lower, upper): enough field for
// one photon but not two. The joint event requires all four modes. A side is
// the pair of modes leaving one second-stage crystal: modes (0,1) for
// crystal III and (2,3) for crystal IV.

#include <array>
#include <cmath>
#include <limits>

#include "postsel/error.hpp"
#include "postsel/field.hpp"

namespace postsel {

struct DetectionThresholds {
    double lower = 1.0;
    double upper = std::sqrt(2.0);

    void validate() const
    {
        if (!(lower > 0.0) || !(upper > lower) || std::isnan(upper))
            throw ValidationError("detection thresholds need 0 < lower < upper");
    }

    bool in_band(double magnitude) const { return magnitude >= lower && magnitude < upper; }
};

// How the two modes of one crystal combine into a per-side detection.
//   any_mode   - at least one of the two modes clicks. This is the reading
//                that reproduces the reported ~20.65% side marginal.
//   both_modes - both modes click (strict two-photon coincidence).
// Either way the joint event implies both sides fire.
enum class SideRule { any_mode, both_modes };

struct RunOutcome {
    std::array<double, 4> magnitudes{};
    std::array<bool, 4> mode_detected{};
    bool joint = false;
    bool side_III = false;
    bool side_IV = false;
};

inline RunOutcome classify(const std::array<double, 4>& magnitudes, const DetectionThresholds& thr,
                           SideRule rule = SideRule::any_mode)
{
    RunOutcome r;
    r.magnitudes = magnitudes;
    for (int k = 0; k < 4; ++k)
        r.mode_detected[k] = thr.in_band(magnitudes[k]);
    const auto& d = r.mode_detected;
    r.joint = d[0] && d[1] && d[2] && d[3];
    if (rule == SideRule::both_modes) {
        r.side_III = d[0] && d[1];
        r.side_IV = d[2] && d[3];
    } else {
        r.side_III = d[0] || d[1];
        r.side_IV = d[2] || d[3];
    }
    return r;
}

template <typename Scalar>
RunOutcome detect(const ModeVector<Scalar>& output, const DetectionThresholds& thr,
                  SideRule rule = SideRule::any_mode)
{
    std::array<double, 4> mags;
    for (int k = 0; k < 4; ++k)
        mags[k] = static_cast<double>(std::sqrt(std::norm(output(k))));
    return classify(mags, thr, rule);
}

template <typename Scalar>
RunOutcome detect(const FieldState<Scalar>& output, const DetectionThresholds& thr,
                  SideRule rule = SideRule::any_mode)
{
    if (output.stage != Stage::final)
        throw ValidationError("detect expects a final-stage field");
    return detect(output.modes, thr, rule);
}

inline bool either_side(const RunOutcome& outcome)
{
    return outcome.side_III || outcome.side_IV;
}

} // namespace postsel

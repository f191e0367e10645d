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

#include "postsel/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "postsel/error.hpp"

namespace postsel {

namespace {

constexpr double pi = std::numbers::pi;

void require_rate(double r)
{
    if (!std::isfinite(r) || r < 0.0)
        throw ValidationError("rates must be finite and non-negative");
}

} // namespace

CurveFit fit_cosine(std::span<const CurvePoint> curve)
{
    std::vector<double> xs;
    xs.reserve(curve.size());
    for (const auto& pt : curve) {
        if (!std::isfinite(pt.phase_sum) || !std::isfinite(pt.p) || !std::isfinite(pt.std_err) ||
            pt.std_err < 0.0)
            throw ValidationError("curve points must be finite with std_err >= 0");
        xs.push_back(pt.phase_sum);
    }
    std::sort(xs.begin(), xs.end());
    const auto distinct = std::unique(xs.begin(), xs.end()) - xs.begin();
    if (distinct <= 1)
        throw SingularFitError("all curve points share one phase sum");
    if (distinct < 5)
        throw ValidationError("fit_cosine needs at least 5 distinct phase sums");

    const bool weighted = std::all_of(curve.begin(), curve.end(), [](const CurvePoint& pt) { return pt.std_err > 0.0; });
    const auto n = static_cast<Eigen::Index>(curve.size());
    Eigen::MatrixX2d X(n, 2);
    Eigen::VectorXd y(n);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& pt = curve[static_cast<std::size_t>(i)];
        X(i, 0) = 2.0 + 2.0 * std::cos(pt.phase_sum);
        X(i, 1) = 1.0;
        y(i) = pt.p;
        w(i) = weighted ? 1.0 / (pt.std_err * pt.std_err) : 1.0;
    }

    const Eigen::Matrix2d normal = X.transpose() * w.asDiagonal() * X;
    const Eigen::Vector2d rhs = X.transpose() * w.cwiseProduct(y);
    Eigen::FullPivLU<Eigen::Matrix2d> lu(normal);
    lu.setThreshold(1e-10);
    if (lu.rank() < 2)
        throw SingularFitError("cosine design matrix is rank deficient");

    const Eigen::Vector2d sol = lu.solve(rhs);
    Eigen::Matrix2d cov = lu.inverse();
    const double rss = (y - X * sol).squaredNorm();
    if (!weighted)
        cov *= rss / static_cast<double>(n - 2);

    CurveFit fit;
    fit.weighted = weighted;
    fit.amplitude_A = sol(0);
    fit.offset = sol(1);
    fit.raw_offset = sol(1);
    fit.amplitude_err = std::sqrt(std::max(cov(0, 0), 0.0));
    fit.offset_err = std::sqrt(std::max(cov(1, 1), 0.0));

    if (fit.raw_offset < 0.0) {
        // Rates cannot be negative: refit the amplitude alone with offset 0.
        const double sxx = X.col(0).cwiseProduct(w).dot(X.col(0));
        fit.amplitude_A = X.col(0).cwiseProduct(w).dot(y) / sxx;
        fit.offset = 0.0;
        fit.offset_clamped = true;
        double var = 1.0 / sxx;
        if (!weighted)
            var *= (y - X.col(0) * fit.amplitude_A).squaredNorm() / static_cast<double>(n - 1);
        fit.amplitude_err = std::sqrt(var);
    }

    double ss = 0.0;
    for (const auto& pt : curve)
        ss += (pt.p - fit.model(pt.phase_sum)) * (pt.p - fit.model(pt.phase_sum));
    fit.residual_rms = std::sqrt(ss / static_cast<double>(curve.size()));
    return fit;
}

std::vector<CurvePoint> joint_curve(std::span<const SweepResult> sweep)
{
    std::vector<CurvePoint> out;
    out.reserve(sweep.size());
    for (const auto& r : sweep)
        out.push_back({r.point.phase_sum, r.result.pooled.p_joint(), r.result.pooled.std_err_joint()});
    return out;
}

ComplementarySet complementary_set(const Settings& base)
{
    const double a = base.alpha();
    const double b = base.beta();
    return {base, {Settings(a, b), Settings(a + pi, b), Settings(a, b + pi), Settings(a + pi, b + pi)}};
}

NormalizedProbability normalize_rates(const std::array<double, 4>& rates, std::size_t which)
{
    if (which >= rates.size())
        throw ValidationError("member index out of range");
    double z = 0.0;
    for (double r : rates) {
        require_rate(r);
        z += r;
    }
    if (!(z > 0.0))
        throw UndefinedError("normalization undefined: all member rates are zero");
    return {rates[which], z, rates[which] / z};
}

NormalizedProbability normalize_either_side(const EnsembleStats& stats)
{
    const double joint = stats.p_joint();
    const double z = stats.p_marginal_III() + stats.p_marginal_IV() - joint;
    if (!(z > 0.0))
        throw UndefinedError("either-side normalization undefined: no side detections");
    return {joint, z, joint / z};
}

Correlator correlator(const std::array<RateEstimate, 4>& m)
{
    double z = 0.0;
    for (const auto& r : m) {
        require_rate(r.rate);
        if (!std::isfinite(r.std_err) || r.std_err < 0.0)
            throw ValidationError("std_err must be finite and non-negative");
        z += r.rate;
    }
    if (!(z > 0.0))
        throw UndefinedError("correlator undefined: complementary set has Z = 0");

    constexpr std::array<double, 4> sign{1.0, -1.0, -1.0, 1.0};
    double num = 0.0;
    for (std::size_t k = 0; k < 4; ++k)
        num += sign[k] * m[k].rate;
    const double e = num / z;

    double var = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        const double d = (sign[k] - e) / z;
        var += d * d * m[k].std_err * m[k].std_err;
    }
    return {e, std::sqrt(var), z};
}

std::array<Settings, 16> chsh_settings(const ChshQuad& q)
{
    const std::array<Settings, 4> pairs{Settings(q.a, q.b), Settings(q.a, q.b_prime), Settings(q.a_prime, q.b),
                                        Settings(q.a_prime, q.b_prime)};
    std::array<Settings, 16> out;
    for (std::size_t j = 0; j < 4; ++j) {
        const auto set = complementary_set(pairs[j]);
        std::copy(set.members.begin(), set.members.end(), out.begin() + static_cast<std::ptrdiff_t>(4 * j));
    }
    return out;
}

CHSHResult chsh(const ChshQuad& quad, const std::array<RateEstimate, 16>& rates)
{
    CHSHResult res;
    res.quad = quad;
    double var = 0.0;
    for (std::size_t j = 0; j < 4; ++j) {
        const Correlator c = correlator({rates[4 * j], rates[4 * j + 1], rates[4 * j + 2], rates[4 * j + 3]});
        res.correlators[j] = c.value;
        res.correlator_errs[j] = c.std_err;
        var += c.std_err * c.std_err;
    }
    const auto& e = res.correlators;
    res.S = e[0] + e[1] + e[2] - e[3];
    res.S_err = std::sqrt(var);
    return res;
}

CHSHResult chsh(const ChshQuad& quad, const std::function<RateEstimate(const Settings&)>& rate_of)
{
    const auto settings = chsh_settings(quad);
    std::array<RateEstimate, 16> rates;
    for (std::size_t k = 0; k < 16; ++k)
        rates[k] = rate_of(settings[k]);
    return chsh(quad, rates);
}

CHSHResult chsh(const ChshQuad& quad, const EnsembleConfig& cfg)
{
    const auto settings = chsh_settings(quad);
    const auto results = sweep(std::span<const Settings>(settings), cfg);
    std::array<RateEstimate, 16> rates;
    for (std::size_t k = 0; k < 16; ++k)
        rates[k] = {results[k].result.pooled.p_joint(), results[k].result.pooled.std_err_joint()};
    return chsh(quad, rates);
}

std::array<Settings, 8> paired_settings(const ComplementarySet& M, const ComplementarySet& Mprime)
{
    std::array<Settings, 8> out;
    std::copy(M.members.begin(), M.members.end(), out.begin());
    std::copy(Mprime.members.begin(), Mprime.members.end(), out.begin() + 4);
    return out;
}

double SIOverlapReport::member_fraction_M(std::size_t k) const
{
    if (member_count_M.at(k) == 0)
        throw UndefinedError("no lambdas postselected under this member of M");
    return static_cast<double>(member_overlap_M[k]) / static_cast<double>(member_count_M[k]);
}

double SIOverlapReport::member_fraction_Mprime(std::size_t k) const
{
    if (member_count_Mprime.at(k) == 0)
        throw UndefinedError("no lambdas postselected under this member of M'");
    return static_cast<double>(member_overlap_Mprime[k]) / static_cast<double>(member_count_Mprime[k]);
}

SIOverlapReport si_overlap(const ComplementarySet& M, const ComplementarySet& Mprime,
                           std::span<const std::uint32_t> masks)
{
    SIOverlapReport rep;
    rep.set_M = M;
    rep.set_Mprime = Mprime;
    rep.n = masks.size();
    for (const std::uint32_t mask : masks) {
        const std::uint32_t m = mask & 0xFu;
        const std::uint32_t mp = (mask >> 4) & 0xFu;
        rep.lambdas_M += m != 0;
        rep.lambdas_Mprime += mp != 0;
        rep.lambdas_both += (m != 0) && (mp != 0);
        for (unsigned k = 0; k < 4; ++k) {
            const bool in_m = (m >> k) & 1u;
            const bool in_mp = (mp >> k) & 1u;
            rep.member_count_M[k] += in_m;
            rep.member_overlap_M[k] += in_m && mp != 0;
            rep.member_count_Mprime[k] += in_mp;
            rep.member_overlap_Mprime[k] += in_mp && m != 0;
        }
    }
    if (rep.lambdas_M == 0 || rep.lambdas_Mprime == 0)
        throw UndefinedError("overlap fraction undefined: a set postselects no lambda");
    rep.overlap_fraction = static_cast<double>(rep.lambdas_both) / static_cast<double>(rep.lambdas_M);
    rep.reverse_fraction = static_cast<double>(rep.lambdas_both) / static_cast<double>(rep.lambdas_Mprime);
    return rep;
}

SIOverlapReport si_overlap(const ComplementarySet& M, const ComplementarySet& Mprime, const EnsembleConfig& cfg)
{
    const auto settings = paired_settings(M, Mprime);
    const auto masks = joint_masks(cfg, settings);
    return si_overlap(M, Mprime, masks);
}

MemberHistogram member_detection_histogram(std::span<const std::uint32_t> masks, unsigned first_bit)
{
    MemberHistogram h{};
    for (const std::uint32_t mask : masks)
        ++h[static_cast<std::size_t>(std::popcount((mask >> first_bit) & 0xFu))];
    return h;
}

MemberHistogram member_detection_histogram(const ComplementarySet& M, const EnsembleConfig& cfg)
{
    const auto masks = joint_masks(cfg, M.members);
    return member_detection_histogram(masks);
}

CSetCheckReport cset_condition_check(std::span<const std::uint32_t> masks)
{
    CSetCheckReport rep;
    rep.n = masks.size();
    if (rep.n == 0)
        throw ValidationError("cset_condition_check needs at least one lambda");
    rep.histogram_M = member_detection_histogram(masks, 0);
    rep.histogram_Mprime = member_detection_histogram(masks, 4);
    for (const std::uint32_t mask : masks)
        rep.disagreements += ((mask & 0xFu) != 0) != (((mask >> 4) & 0xFu) != 0);
    rep.disagreement_fraction = static_cast<double>(rep.disagreements) / static_cast<double>(rep.n);
    return rep;
}

CSetCheckReport cset_condition_check(const ComplementarySet& M, const ComplementarySet& Mprime,
                                     const EnsembleConfig& cfg)
{
    const auto settings = paired_settings(M, Mprime);
    const auto masks = joint_masks(cfg, settings);
    return cset_condition_check(masks);
}

} // namespace postsel

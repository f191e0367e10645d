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

// Classical field propagation through the two-stage, four-crystal network.
//
// A FieldState holds four scaled complex amplitudes in the fixed order
//
//     (s1, p1*, s2, p2*)
//
// NOTE: components 1 and 3 (zero-based) store the *complex conjugate* of the
// p-mode amplitude. Each crystal couples s with p*, so keeping p* in the
// state makes every stage a plain complex-linear map. Only magnitudes are
// ever reported, and those are the same for p and p*.
//
// Amplitudes are in units of sqrt(photon): |c|^2 = 0.5 is "half a photon".

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <utility>

#include "postsel/error.hpp"

namespace postsel {

template <typename Scalar>
using Amplitude = std::complex<Scalar>;

template <typename Scalar>
using ModeVector = Eigen::Matrix<std::complex<Scalar>, 4, 1>;

template <typename Scalar>
using ModeMatrix = Eigen::Matrix<std::complex<Scalar>, 4, 4>;

using ModeVectord = ModeVector<double>;
using ModeMatrixd = ModeMatrix<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// Map any finite angle into [0, 2pi). fmod is exact, so an input that is an
// exact multiple of 2pi away from another reduces to the same bits.
inline double reduce_angle(double radians)
{
    if (!std::isfinite(radians))
        throw ValidationError("angle must be finite");
    double r = std::fmod(radians, two_pi);
    if (r < 0.0)
        r += two_pi;
    if (r >= two_pi)
        r = 0.0;
    return r;
}

enum class Stage { initial, mid, final };

template <typename Scalar>
struct FieldState {
    ModeVector<Scalar> modes = ModeVector<Scalar>::Zero();
    Stage stage = Stage::initial;
};

using FieldStated = FieldState<double>;

// Shared single-pass gain of every crystal. Dimensionless, g >= 0.
class Gain {
public:
    static constexpr double default_value = 0.25;

    constexpr Gain() = default;
    explicit Gain(double g) : g_(g)
    {
        if (!std::isfinite(g) || g < 0.0)
            throw ValidationError("gain must be finite and >= 0");
    }

    constexpr double value() const { return g_; }

private:
    double g_ = default_value;
};

// Phase-plate angles in front of the second-stage crystals, stored reduced.
class Settings {
public:
    Settings() = default;
    Settings(double alpha, double beta)
        : alpha_(reduce_angle(alpha)), beta_(reduce_angle(beta))
    {
    }

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double phase_sum() const { return reduce_angle(alpha_ + beta_); }

    friend bool operator==(const Settings&, const Settings&) = default;

private:
    double alpha_ = 0.0;
    double beta_ = 0.0;
};

// One undepleted-pump crystal acting on (s, p*).
template <typename Scalar>
std::pair<Amplitude<Scalar>, Amplitude<Scalar>>
crystal_transform(const Amplitude<Scalar>& s_in, const Amplitude<Scalar>& p_conj_in, Gain g)
{
    using std::cosh;
    using std::sinh;
    const Scalar gv = static_cast<Scalar>(g.value());
    const Scalar c = cosh(gv);
    const Scalar s = sinh(gv);
    const Amplitude<Scalar> i{0, 1};
    return {s_in * c + i * p_conj_in * s, p_conj_in * c - i * s_in * s};
}

// Block-diagonal map applied by a pair of side-by-side crystals.
template <typename Scalar = double>
ModeMatrix<Scalar> gain_matrix(Gain g)
{
    using std::cosh;
    using std::sinh;
    const Scalar gv = static_cast<Scalar>(g.value());
    const Amplitude<Scalar> c{cosh(gv), 0};
    const Amplitude<Scalar> is{0, sinh(gv)};

    ModeMatrix<Scalar> m = ModeMatrix<Scalar>::Zero();
    for (int o : {0, 2}) {
        m(o, o) = c;
        m(o, o + 1) = is;
        m(o + 1, o) = -is;
        m(o + 1, o + 1) = c;
    }
    return m;
}

// Phase plates on s1 and s2, plus the p-beam swap between the two stages.
template <typename Scalar = double>
ModeMatrix<Scalar> interchange_matrix(const Settings& settings)
{
    using std::cos;
    using std::sin;
    const Scalar a = static_cast<Scalar>(settings.alpha());
    const Scalar b = static_cast<Scalar>(settings.beta());

    ModeMatrix<Scalar> m = ModeMatrix<Scalar>::Zero();
    m(0, 0) = Amplitude<Scalar>(cos(a), sin(a));
    m(1, 3) = Scalar(1);
    m(2, 2) = Amplitude<Scalar>(cos(b), sin(b));
    m(3, 1) = Scalar(1);
    return m;
}

// Pairwise crystal_transform on modes (0,1) and (2,3); equals gain_matrix(g) * v.
template <typename Scalar>
ModeVector<Scalar> apply_gain(const ModeVector<Scalar>& v, Gain g)
{
    ModeVector<Scalar> out;
    std::tie(out(0), out(1)) = crystal_transform<Scalar>(v(0), v(1), g);
    std::tie(out(2), out(3)) = crystal_transform<Scalar>(v(2), v(3), g);
    return out;
}

template <typename Scalar>
FieldState<Scalar> propagate_to_mid(const FieldState<Scalar>& input, Gain g)
{
    if (input.stage != Stage::initial)
        throw ValidationError("propagate_to_mid expects an initial-stage field");
    return {gain_matrix<Scalar>(g) * input.modes, Stage::mid};
}

// Full network, written as the explicit matrix product G * T * G.
template <typename Scalar>
FieldState<Scalar> propagate(const FieldState<Scalar>& input, Gain g, const Settings& settings)
{
    if (input.stage != Stage::initial)
        throw ValidationError("propagate expects an initial-stage field");
    const ModeMatrix<Scalar> gm = gain_matrix<Scalar>(g);
    return {gm * (interchange_matrix<Scalar>(settings) * (gm * input.modes)), Stage::final};
}

// Same map as propagate(), with the trigonometry hoisted out and the two 4x4
// products unrolled into real arithmetic. Used by the Monte Carlo loop.
template <typename Scalar>
class Propagator {
public:
    Propagator(Gain g, const Settings& settings)
    {
        using std::cos;
        using std::cosh;
        using std::sin;
        using std::sinh;
        const Scalar gv = static_cast<Scalar>(g.value());
        ch_ = cosh(gv);
        sh_ = sinh(gv);
        ca_ = cos(static_cast<Scalar>(settings.alpha()));
        sa_ = sin(static_cast<Scalar>(settings.alpha()));
        cb_ = cos(static_cast<Scalar>(settings.beta()));
        sb_ = sin(static_cast<Scalar>(settings.beta()));
    }

    ModeVector<Scalar> operator()(const ModeVector<Scalar>& in) const
    {
        // first stage
        const Amplitude<Scalar> s1 = mix(in(0), in(1));
        const Amplitude<Scalar> q1 = unmix(in(1), in(0));
        const Amplitude<Scalar> s2 = mix(in(2), in(3));
        const Amplitude<Scalar> q2 = unmix(in(3), in(2));

        // phase plates and beam swap
        const Amplitude<Scalar> u1{ca_ * s1.real() - sa_ * s1.imag(), ca_ * s1.imag() + sa_ * s1.real()};
        const Amplitude<Scalar> u3{cb_ * s2.real() - sb_ * s2.imag(), cb_ * s2.imag() + sb_ * s2.real()};

        ModeVector<Scalar> out;
        out(0) = mix(u1, q2);
        out(1) = unmix(q2, u1);
        out(2) = mix(u3, q1);
        out(3) = unmix(q1, u3);
        return out;
    }

    FieldState<Scalar> operator()(const FieldState<Scalar>& input) const
    {
        if (input.stage != Stage::initial)
            throw ValidationError("Propagator expects an initial-stage field");
        return {(*this)(input.modes), Stage::final};
    }

private:
    // a*cosh + i*b*sinh
    Amplitude<Scalar> mix(const Amplitude<Scalar>& a, const Amplitude<Scalar>& b) const
    {
        return {ch_ * a.real() - sh_ * b.imag(), ch_ * a.imag() + sh_ * b.real()};
    }
    // a*cosh - i*b*sinh
    Amplitude<Scalar> unmix(const Amplitude<Scalar>& a, const Amplitude<Scalar>& b) const
    {
        return {ch_ * a.real() + sh_ * b.imag(), ch_ * a.imag() - sh_ * b.real()};
    }

    Scalar ch_{}, sh_{};
    Scalar ca_{}, sa_{}, cb_{}, sb_{};
};

// |c_0|^2 - |c_1|^2 and |c_2|^2 - |c_3|^2: conserved by each gain stage.
template <typename Scalar>
std::pair<Scalar, Scalar> manley_rowe(const ModeVector<Scalar>& v)
{
    return {std::norm(v(0)) - std::norm(v(1)), std::norm(v(2)) - std::norm(v(3))};
}

} // namespace postsel

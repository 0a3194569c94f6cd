// Copyright 2026 The qkr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <complex>
#include <span>
#include <variant>
#include <vector>

namespace qkr {

using cdouble = std::complex<double>;

inline constexpr double kDefaultNormTolerance = 1e-10;
inline constexpr double kDefaultEdgeBudget = 1e-10;

// |a|^2, spelled out so every observable rounds identically.
inline double probability(cdouble a) { return a.real() * a.real() + a.imag() * a.imag(); }

inline constexpr int kMaxModulusNudge = 4096;

// a * unit, adjusted so that probability(result) == probability(a)
// bit-for-bit. One component moves by at most kMaxModulusNudge ulps and the
// other is re-solved from the remaining probability. The displacement is a
// few ulps of |a| in general and below sqrt(machine epsilon) * |a| when one
// component is far smaller than the other. `unit` must have modulus 1.
cdouble rotate_preserving_modulus(cdouble a, cdouble unit);

// Rotor wavefunction in the angular-momentum basis,
//   psi(theta) = 1/sqrt(2) * sum_l a_l exp(i l theta),   l = -L .. L.
// Amplitude a_l lives at storage index l + L.
class RotorState {
public:
    RotorState(int half_width, double hbar);

    int half_width() const noexcept { return half_width_; }
    int dimension() const noexcept { return 2 * half_width_ + 1; }
    double hbar() const noexcept { return hbar_; }

    double time() const noexcept { return time_; }
    long kick_count() const noexcept { return kick_count_; }
    void set_clock(double time, long kick_count)
    {
        time_ = time;
        kick_count_ = kick_count;
    }

    cdouble& operator[](int l) { return amplitudes_[static_cast<std::size_t>(l + half_width_)]; }
    const cdouble& operator[](int l) const
    {
        return amplitudes_[static_cast<std::size_t>(l + half_width_)];
    }

    std::span<cdouble> amplitudes() noexcept { return amplitudes_; }
    std::span<const cdouble> amplitudes() const noexcept { return amplitudes_; }

    double norm() const;
    // |a_{-L}|^2 + |a_{+L}|^2
    double edge_mass() const;

    bool operator==(const RotorState&) const = default;

private:
    int half_width_;
    double hbar_;
    double time_ = 0.0;
    long kick_count_ = 0;
    std::vector<cdouble> amplitudes_;
};

struct MomentumEigenstate {
    int l0 = 0;
    bool operator==(const MomentumEigenstate&) const = default;
};

struct GaussianPacket {
    int l0 = 0;
    double sigma = 1.0;
    bool operator==(const GaussianPacket&) const = default;
};

using InitialStateSpec = std::variant<MomentumEigenstate, GaussianPacket>;

// Throws InvalidArgument when L < 1, hbar <= 0, the eigenstate lies outside
// the basis, or a packet does not satisfy |l0| + 4 sigma < L.
RotorState new_state(const InitialStateSpec& spec, int half_width, double hbar);

struct NormReport {
    double norm;
    double norm_error; // |1 - norm|
    double edge_mass;
    bool ok;
};

// Pure diagnostic. Never rescales the amplitudes.
NormReport renormalize_check(const RotorState& state, double norm_tol,
                             double edge_budget = kDefaultEdgeBudget);

} // namespace qkr

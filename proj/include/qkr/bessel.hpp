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

#include "qkr/state.hpp"

#include <vector>

namespace qkr {

// J_0(x) .. J_max_order(x) for x >= 0 by Miller's backward recurrence.
// The sequence is scaled so that J_0^2 + 2 sum_{m>=1} J_m^2 = 1 and its sign
// fixed by J_0 + 2 sum_{k>=1} J_{2k} = 1; the two identities are checked
// against each other.
std::vector<double> bessel_j_sequence(double x, int max_order);

// Column of the kick operator exp(-i k cos theta) in the momentum basis:
//   c_m = i^{-m} J_m(k),   m = j - l,   |m| <= B.
class BesselBand {
public:
    double kick_argument() const noexcept { return kick_argument_; }
    int half_width() const noexcept { return half_width_; }

    // Coefficient for offset m in [-B, B].
    cdouble operator[](int m) const { return coefficients_[static_cast<std::size_t>(m + half_width_)]; }
    const std::vector<cdouble>& coefficients() const noexcept { return coefficients_; }

    // sum_{|m|>B} J_m(k)^2
    double tail_mass() const noexcept { return tail_mass_; }
    // sum_{|m|<=B} J_m(k)^2
    double retained_mass() const noexcept { return retained_mass_; }

    // Band of exactly the given half width. Used for untruncated (B >= 2L)
    // products and for tests.
    static BesselBand with_half_width(double kick_argument, int half_width);

private:
    double kick_argument_ = 0.0;
    int half_width_ = 0;
    double tail_mass_ = 0.0;
    double retained_mass_ = 1.0;
    std::vector<cdouble> coefficients_;
};

// Smallest band whose discarded tail sum_{|m|>B} J_m(k)^2 is below tol.
BesselBand build_band(double kick_argument, double tol);

} // namespace qkr

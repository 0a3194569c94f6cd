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

#include "qkr/error.hpp"
#include "qkr/state.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace qkr;

TEST_CASE("momentum eigenstate occupies exactly one component")
{
    const auto s = new_state(MomentumEigenstate{3}, 16, 1.0);
    CHECK(s.dimension() == 33);
    for (int l = -16; l <= 16; ++l)
        CHECK(s[l] == (l == 3 ? cdouble{1.0, 0.0} : cdouble{0.0, 0.0}));
    CHECK(s.norm() == 1.0);
    CHECK(s.time() == 0.0);
    CHECK(s.kick_count() == 0);
}

TEST_CASE("gaussian packet is normalized, centred and symmetric")
{
    const auto s = new_state(GaussianPacket{2, 3.0}, 40, 0.5);
    // Independent normalization of the same profile.
    double total = 0.0;
    for (int l = -40; l <= 40; ++l) {
        const double x = (l - 2) / 3.0;
        total += std::exp(-0.5 * x * x);
    }
    for (int l = -40; l <= 40; ++l) {
        const double x = (l - 2) / 3.0;
        CHECK(s[l].real() == doctest::Approx(std::exp(-0.25 * x * x) / std::sqrt(total)).epsilon(1e-14));
        CHECK(s[l].imag() == 0.0);
    }
    for (int d = 0; d <= 30; ++d)
        CHECK(s[2 + d] == s[2 - d]);
    CHECK(std::abs(s.norm() - 1.0) < 1e-15);
}

TEST_CASE("construction preconditions")
{
    CHECK_THROWS_AS(new_state(MomentumEigenstate{0}, 0, 1.0), InvalidArgument);
    CHECK_THROWS_AS(new_state(MomentumEigenstate{0}, 8, 0.0), InvalidArgument);
    CHECK_THROWS_AS(new_state(MomentumEigenstate{0}, 8, -1.0), InvalidArgument);
    CHECK_THROWS_AS(new_state(MomentumEigenstate{9}, 8, 1.0), InvalidArgument);
    CHECK_THROWS_AS(new_state(MomentumEigenstate{-9}, 8, 1.0), InvalidArgument);
    CHECK_NOTHROW(new_state(MomentumEigenstate{8}, 8, 1.0));
    CHECK_THROWS_AS(new_state(GaussianPacket{0, 0.0}, 8, 1.0), InvalidArgument);
    CHECK_THROWS_AS(new_state(GaussianPacket{0, 2.0}, 8, 1.0), InvalidArgument); // 4 sigma = L
    CHECK_THROWS_AS(new_state(GaussianPacket{5, 1.0}, 8, 1.0), InvalidArgument);
    CHECK_NOTHROW(new_state(GaussianPacket{3, 1.0}, 8, 1.0));
    CHECK_THROWS_AS(RotorState(0, 1.0), InvalidArgument);
}

TEST_CASE("renormalize_check reports drift without rescaling")
{
    auto s = new_state(MomentumEigenstate{0}, 4, 1.0);
    s[0] = {0.6, 0.0};
    s[4] = {0.0, 0.5};
    const auto before = s;
    const auto r = renormalize_check(s, 1e-10);
    CHECK(r.norm == doctest::Approx(0.61));
    CHECK(r.norm_error == doctest::Approx(0.39));
    CHECK(r.edge_mass == doctest::Approx(0.25));
    CHECK_FALSE(r.ok);
    CHECK(s == before);

    const auto clean = renormalize_check(new_state(MomentumEigenstate{1}, 4, 1.0), 1e-10);
    CHECK(clean.ok);
    CHECK(clean.norm_error == 0.0);
    CHECK(clean.edge_mass == 0.0);
    CHECK_THROWS_AS(renormalize_check(s, 0.0), InvalidArgument);
}

TEST_CASE("edge mass counts only the two outermost components")
{
    RotorState s(3, 1.0);
    s[-3] = {0.1, 0.2};
    s[3] = {0.0, 0.3};
    s[2] = {0.9, 0.0};
    CHECK(s.edge_mass() == doctest::Approx(0.01 + 0.04 + 0.09));
}

TEST_CASE("rotate_preserving_modulus keeps |a|^2 bit-identical with a small displacement")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> ph(0.0, 6.283185307179586);
    const double eps = std::numeric_limits<double>::epsilon();
    int exact = 0;
    const int trials = 200000;
    for (int t = 0; t < trials; ++t) {
        const double scale = std::pow(10.0, -8.0 * std::abs(u(rng)));
        // A third of the samples are nearly real: the small component's square
        // sits below one ulp of |a|^2, so it can only absorb corrections of
        // order sqrt(eps) |a|.
        const bool nearly_real = t % 3 == 0;
        const double squeeze = nearly_real ? 1e-9 : 1.0;
        const cdouble a{scale * u(rng), squeeze * scale * u(rng)};
        const double phi = (t % 2 == 0) ? ph(rng) : 1e-6 * ph(rng);
        const cdouble unit{std::cos(phi), std::sin(phi)};
        const cdouble r = rotate_preserving_modulus(a, unit);
        const double dist = std::abs(r - a * unit);
        if (nearly_real)
            CHECK(dist <= 2.0 * std::sqrt(eps) * std::abs(a));
        else
            CHECK(dist <= 1e-9 * std::abs(a));
        if (probability(r) == probability(a))
            ++exact;
    }
    CHECK(exact == trials);
}

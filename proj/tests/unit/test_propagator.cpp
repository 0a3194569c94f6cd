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

#include "qkr/bessel.hpp"
#include "qkr/error.hpp"
#include "qkr/propagator.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace qkr;

namespace {

constexpr double kNoBudget = std::numeric_limits<double>::infinity();

double oracle_j(int m, double x)
{
    const double v = std::cyl_bessel_j(static_cast<double>(std::abs(m)), x);
    return (m < 0 && m % 2 != 0) ? -v : v;
}

enum class Ordering { free_then_kick, kick_then_free };

// Dense one-step map written directly from the matrix elements. The free
// phase of free_then_kick carries the source index j; kick_then_free is the
// deliberately wrong ordering that carries the target index l instead.
RotorState dense_step(const RotorState& a, double K, double hbar, double dt,
                      Ordering order = Ordering::free_then_kick, int kick_sign = -1)
{
    const int L = a.half_width();
    const double k = K / hbar;
    RotorState out(L, hbar);
    for (int l = -L; l <= L; ++l) {
        std::complex<long double> acc = 0.0L;
        for (int j = -L; j <= L; ++j) {
            const int idx = order == Ordering::free_then_kick ? j : l;
            const long double phase = -static_cast<long double>(hbar) * idx * idx * dt / 2.0L;
            const std::complex<long double> ipow = std::pow(
                std::complex<long double>(0.0L, static_cast<long double>(kick_sign)), j - l);
            const std::complex<long double> free(std::cos(phase), std::sin(phase));
            acc += ipow * free * static_cast<long double>(oracle_j(j - l, k)) *
                   std::complex<long double>(a[j].real(), a[j].imag());
        }
        out[l] = {static_cast<double>(acc.real()), static_cast<double>(acc.imag())};
    }
    return out;
}

RotorState random_normalized(int L, double hbar, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RotorState s(L, hbar);
    double n = 0.0;
    for (auto& a : s.amplitudes()) {
        a = {g(rng), g(rng)};
        n += std::norm(a);
    }
    for (auto& a : s.amplitudes())
        a /= std::sqrt(n);
    return s;
}

double max_abs_diff(const RotorState& a, const RotorState& b)
{
    double m = 0.0;
    for (int l = -a.half_width(); l <= a.half_width(); ++l)
        m = std::max(m, std::abs(a[l] - b[l]));
    return m;
}

double l2_diff(const RotorState& a, const RotorState& b)
{
    double s = 0.0;
    for (int l = -a.half_width(); l <= a.half_width(); ++l)
        s += std::norm(a[l] - b[l]);
    return std::sqrt(s);
}

} // namespace

TEST_CASE("untruncated banded step equals the dense matrix")
{
    const int L = 32;
    for (const double k : {0.5, 2.0, 5.0}) {
        for (unsigned seed = 1; seed <= 3; ++seed) {
            const double hbar = 0.7;
            const double dt = seed == 1 ? 1.0 : 1.618033988749895;
            const StepParams p{k * hbar, hbar, dt};
            const auto a = random_normalized(L, hbar, seed);
            auto b = a;
            step_bessel(b, p, BesselBand::with_half_width(k, 2 * L), kNoBudget);
            INFO("k = " << k << ", seed = " << seed);
            CHECK(max_abs_diff(b, dense_step(a, p.kick_strength, hbar, dt)) <= 1e-12);
        }
    }
}

TEST_CASE("spectral step equals the banded step on a wide enough grid")
{
    const int L = 32;
    for (const double k : {0.5, 2.0, 5.0}) {
        const StepParams p{k, 1.0, 1.0};
        const auto a = random_normalized(L, 1.0, 11);
        auto b = a;
        auto s = a;
        step_bessel(b, p, BesselBand::with_half_width(k, 2 * L), kNoBudget);
        step_spectral(s, p, default_grid_size(2 * L), kNoBudget);
        CHECK(l2_diff(b, s) <= 1e-10);
    }
}

TEST_CASE("the oracle distinguishes the step ordering and the kick sign")
{
    const int L = 32;
    const StepParams p{5.0, 1.0, 1.0};
    const auto a = random_normalized(L, 1.0, 5);
    auto b = a;
    step_bessel(b, p, BesselBand::with_half_width(5.0, 2 * L), kNoBudget);
    CHECK(max_abs_diff(b, dense_step(a, 5.0, 1.0, 1.0, Ordering::kick_then_free)) > 1e-2);
    CHECK(max_abs_diff(b, dense_step(a, 5.0, 1.0, 1.0, Ordering::free_then_kick, +1)) > 1e-2);
}

TEST_CASE("zero kick is pure free evolution")
{
    const int L = 20;
    const double hbar = 0.4, dt = 1.618033988749895;
    const auto a = random_normalized(L, hbar, 3);
    for (const auto kind : {PropagatorKind::bessel, PropagatorKind::spectral}) {
        auto prop = make_propagator(L, 0.0, hbar, {kind, 0, kDefaultBandTolerance, kNoBudget});
        auto s = a;
        prop->forward(s, dt);
        for (int l = -L; l <= L; ++l) {
            const double phase = -hbar * l * l * dt / 2.0;
            CHECK(std::abs(s[l] - a[l] * std::polar(1.0, phase)) < 1e-14);
        }
    }
}

TEST_CASE("engines agree over many kicks and preserve the norm")
{
    const int L = 512;
    const double K = 5.0, hbar = 1.0;
    auto bes = make_propagator(L, K, hbar, {PropagatorKind::bessel, 0, 1e-30, 1e-10});
    auto spe = make_propagator(L, K, hbar, {PropagatorKind::spectral, 0, 1e-30, 1e-10});
    auto a = new_state(MomentumEigenstate{0}, L, hbar);
    auto b = a;
    for (int n = 0; n < 200; ++n) {
        const double dt = (n % 3 == 0) ? 0.618033988749895 : 1.0;
        bes->forward(a, dt);
        spe->forward(b, dt);
    }
    CHECK(l2_diff(a, b) < 1e-10);
    CHECK(std::abs(a.norm() - 1.0) < 1e-12);
    CHECK(std::abs(b.norm() - 1.0) < 1e-12);
    CHECK(b.kick_count() == 200);
}

TEST_CASE("adjoint undoes the forward step")
{
    const int L = 256;
    for (const auto kind : {PropagatorKind::bessel, PropagatorKind::spectral}) {
        auto prop = make_propagator(L, 5.0, 0.4, {kind, 0, 1e-30, 1e-10});
        const auto start = new_state(GaussianPacket{3, 4.0}, L, 0.4);
        auto s = start;
        const double gaps[] = {1.0, 0.618033988749895, 0.381966011250105, 1.0, 0.618033988749895};
        for (double g : gaps)
            prop->forward(s, g);
        CHECK(l2_diff(s, start) > 0.1);
        for (int i = 4; i >= 0; --i)
            prop->adjoint(s, gaps[i]);
        CHECK(l2_diff(s, start) < 1e-12);
        CHECK(s.kick_count() == 0);
    }
}

TEST_CASE("free-function entry points match the engines")
{
    const int L = 128;
    const StepParams p{3.0, 0.5, 1.0};
    auto a = new_state(GaussianPacket{0, 3.0}, L, 0.5);
    auto b = a;
    step_bessel(a, p, build_band(p.kick_argument(), 1e-30));
    step_spectral(b, p, default_grid_size(L));
    CHECK(l2_diff(a, b) < 1e-12);
    step_adjoint(a, p, PropagatorKind::bessel);
    step_adjoint_spectral(b, p, default_grid_size(L));
    const auto start = new_state(GaussianPacket{0, 3.0}, L, 0.5);
    CHECK(l2_diff(a, start) < 1e-12);
    CHECK(l2_diff(b, start) < 1e-12);
}

TEST_CASE("leakage into the basis edge aborts the step")
{
    const int L = 16;
    auto s = new_state(MomentumEigenstate{0}, L, 1.0);
    const StepParams p{20.0, 1.0, 1.0};
    CHECK_THROWS_AS(step_spectral(s, p, default_grid_size(L)), LeakageError);
}

TEST_CASE("step preconditions")
{
    auto s = new_state(MomentumEigenstate{0}, 16, 1.0);
    CHECK_THROWS_AS(step_spectral(s, {1.0, 0.5, 1.0}, default_grid_size(16)), InvalidArgument);
    CHECK_THROWS_AS(step_spectral(s, {1.0, 1.0, 0.0}, default_grid_size(16)), InvalidArgument);
    CHECK_THROWS_AS(step_spectral(s, {-1.0, 1.0, 1.0}, default_grid_size(16)), InvalidArgument);
    CHECK_THROWS_AS(step_spectral(s, {1.0, 1.0, 1.0}, 32), InvalidArgument);
    CHECK_THROWS_AS(step_bessel(s, {1.0, 1.0, 1.0}, build_band(2.0, 1e-14)), InvalidArgument);
    CHECK_THROWS_AS(propagator_kind_from_string("fft"), InvalidArgument);
    CHECK(propagator_kind_from_string("bessel") == PropagatorKind::bessel);
    CHECK(to_string(PropagatorKind::spectral) == "spectral");
    auto prop = make_propagator(8, 1.0, 1.0, {});
    auto other = new_state(MomentumEigenstate{0}, 16, 1.0);
    CHECK_THROWS_AS(prop->forward(other, 1.0), InvalidArgument);
}

TEST_CASE("default grid is the smallest 5-smooth size covering the basis")
{
    auto smooth = [](int n) {
        for (int f : {2, 3, 5})
            while (n % f == 0)
                n /= f;
        return n == 1;
    };
    for (int L : {1, 2, 7, 32, 100, 1000, 8192, 16384}) {
        const int n = default_grid_size(L);
        CHECK(n >= 2 * L + 1);
        CHECK(smooth(n));
        for (int m = 2 * L + 1; m < n; ++m)
            CHECK_FALSE(smooth(m));
    }
}

TEST_CASE("free phases are even and exact at l = 0")
{
    std::vector<cdouble> ph;
    free_phases(0.4, 1.0, 10, ph);
    REQUIRE(ph.size() == 11);
    CHECK(ph[0] == cdouble{1.0, 0.0});
    for (int l = 0; l <= 10; ++l)
        CHECK(std::abs(ph[static_cast<std::size_t>(l)] - std::polar(1.0, -0.2 * l * l)) < 1e-14);
}

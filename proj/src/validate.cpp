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

#include "qkr/validate.hpp"

#include "qkr/bessel.hpp"
#include "qkr/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace qkr {

namespace {

double bessel_j(int order, double x)
{
    const double v = std::cyl_bessel_j(static_cast<double>(std::abs(order)), x);
    return (order < 0 && (order % 2 != 0)) ? -v : v;
}

cdouble i_power_neg(int m)
{
    switch (((m % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, -1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, 1.0};
    }
}

double l2_difference(const RotorState& a, const RotorState& b)
{
    double s = 0.0;
    for (int l = -a.half_width(); l <= a.half_width(); ++l)
        s += probability(a[l] - b[l]);
    return std::sqrt(s);
}

} // namespace

std::vector<cdouble> dense_step_matrix(int L, double kick_strength, double hbar, double dt)
{
    const int n = 2 * L + 1;
    const double k = kick_strength / hbar;
    std::vector<cdouble> u(static_cast<std::size_t>(n) * n);
    for (int l = -L; l <= L; ++l) {
        for (int j = -L; j <= L; ++j) {
            const double jd = j;
            const double phase = -hbar * jd * jd * dt / 2.0;
            u[static_cast<std::size_t>(l + L) * n + static_cast<std::size_t>(j + L)] =
                i_power_neg(j - l) * std::polar(1.0, phase) * bessel_j(j - l, k);
        }
    }
    return u;
}

RotorState random_state(int half_width, double hbar, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    RotorState s(half_width, hbar);
    double norm = 0.0;
    for (auto& a : s.amplitudes()) {
        const double re = g(rng);
        const double im = g(rng);
        a = {re, im};
        norm += re * re + im * im;
    }
    const double scale = 1.0 / std::sqrt(norm);
    for (auto& a : s.amplitudes())
        a *= scale;
    return s;
}

ValidationReport run_validation(int L, const std::vector<double>& kick_arguments,
                                int states_per_case, std::uint64_t seed)
{
    constexpr double hbar = 1.0;
    constexpr double dt = 1.0;
    constexpr double no_budget = std::numeric_limits<double>::infinity();
    ValidationReport rep;
    rep.half_width = L;
    const int n = 2 * L + 1;
    const int grid = default_grid_size(2 * L);

    for (const double k : kick_arguments) {
        ValidationCase c;
        c.kick_argument = k;
        const StepParams p{k * hbar, hbar, dt};
        const auto band = BesselBand::with_half_width(k, 2 * L);
        const auto u = dense_step_matrix(L, p.kick_strength, hbar, dt);
        for (int s = 0; s < states_per_case; ++s) {
            const RotorState a = random_state(L, hbar, seed + static_cast<std::uint64_t>(s));

            RotorState dense(L, hbar);
            for (int r = 0; r < n; ++r) {
                cdouble acc{0.0, 0.0};
                for (int col = 0; col < n; ++col)
                    acc += u[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(col)] *
                           a.amplitudes()[static_cast<std::size_t>(col)];
                dense.amplitudes()[static_cast<std::size_t>(r)] = acc;
            }

            RotorState banded = a;
            step_bessel(banded, p, band, no_budget);
            RotorState spectral = a;
            step_spectral(spectral, p, grid, no_budget);

            for (int l = -L; l <= L; ++l)
                c.dense_vs_bessel = std::max(c.dense_vs_bessel, std::abs(dense[l] - banded[l]));
            c.bessel_vs_spectral = std::max(c.bessel_vs_spectral, l2_difference(banded, spectral));
        }
        rep.cases.push_back(c);
    }
    rep.ok = std::all_of(rep.cases.begin(), rep.cases.end(), [&](const ValidationCase& c) {
        return c.dense_vs_bessel <= rep.dense_tolerance &&
               c.bessel_vs_spectral <= rep.spectral_tolerance;
    });
    return rep;
}

} // namespace qkr

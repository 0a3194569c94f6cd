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

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qkr {

namespace {

// i^{-m} for any integer m.
cdouble inverse_i_power(int m)
{
    switch (((-m) % 4 + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

// Orders above this carry nothing measurable in double precision.
int negligible_order(double x)
{
    return static_cast<int>(std::ceil(x + 12.0 * std::cbrt(std::max(x, 1.0)) + 40.0));
}

} // namespace

std::vector<double> bessel_j_sequence(double x, int max_order)
{
    if (max_order < 0)
        throw InvalidArgument("bessel_j_sequence: negative order");
    if (!(x >= 0.0) || !std::isfinite(x))
        throw InvalidArgument("bessel_j_sequence: argument must be finite and >= 0");

    std::vector<double> out(static_cast<std::size_t>(max_order) + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }

    const double top = std::max<double>(max_order, x);
    const int start = 2 * ((static_cast<int>(top) + 30 + static_cast<int>(std::sqrt(160.0 * top))) / 2);

    std::vector<double> j(static_cast<std::size_t>(start) + 2, 0.0);
    j[static_cast<std::size_t>(start) + 1] = 0.0;
    j[static_cast<std::size_t>(start)] = 1e-300;
    for (int m = start; m >= 1; --m) {
        const auto um = static_cast<std::size_t>(m);
        j[um - 1] = (2.0 * m / x) * j[um] - j[um + 1];
        if (std::abs(j[um - 1]) > 1e100) {
            for (std::size_t i = um - 1; i <= static_cast<std::size_t>(start); ++i)
                j[i] *= 1e-100;
        }
    }

    double sumsq = j[0] * j[0];
    double even = j[0];
    for (int m = 1; m <= start; ++m) {
        const double v = j[static_cast<std::size_t>(m)];
        sumsq += 2.0 * v * v;
        if (m % 2 == 0)
            even += 2.0 * v;
    }
    double scale = 1.0 / std::sqrt(sumsq);
    if (even < 0.0)
        scale = -scale;
    // The two normalization identities must agree.
    if (std::abs(even * scale - 1.0) > 1e-8)
        throw std::logic_error("bessel_j_sequence: normalization identities disagree");

    for (int m = 0; m <= max_order; ++m)
        out[static_cast<std::size_t>(m)] = m <= start ? j[static_cast<std::size_t>(m)] * scale : 0.0;
    return out;
}

BesselBand BesselBand::with_half_width(double kick_argument, int half_width)
{
    if (half_width < 0)
        throw InvalidArgument("Bessel band half width must be >= 0");
    if (!(kick_argument >= 0.0) || !std::isfinite(kick_argument))
        throw InvalidArgument("kick argument K/hbar must be finite and >= 0");

    const int order = std::max(half_width, negligible_order(kick_argument));
    const auto jm = bessel_j_sequence(kick_argument, order);

    BesselBand band;
    band.kick_argument_ = kick_argument;
    band.half_width_ = half_width;
    band.coefficients_.resize(static_cast<std::size_t>(2 * half_width + 1));
    double retained = jm[0] * jm[0];
    for (int m = -half_width; m <= half_width; ++m) {
        const int am = std::abs(m);
        double jv = jm[static_cast<std::size_t>(am)];
        if (m < 0 && (am % 2) == 1)
            jv = -jv; // J_{-m} = (-1)^m J_m
        band.coefficients_[static_cast<std::size_t>(m + half_width)] = inverse_i_power(m) * jv;
        if (m > 0)
            retained += 2.0 * jv * jv;
    }
    double tail = 0.0;
    for (int m = order; m > half_width; --m) {
        const double v = jm[static_cast<std::size_t>(m)];
        tail += 2.0 * v * v;
    }
    band.tail_mass_ = tail;
    band.retained_mass_ = retained;
    return band;
}

BesselBand build_band(double kick_argument, double tol)
{
    if (!(tol > 0.0))
        throw InvalidArgument("band tolerance must be positive");
    if (!(kick_argument >= 0.0) || !std::isfinite(kick_argument))
        throw InvalidArgument("kick argument K/hbar must be finite and >= 0");

    const int order = negligible_order(kick_argument);
    const auto jm = bessel_j_sequence(kick_argument, order);

    // tail[B] = 2 sum_{m>B} J_m^2, accumulated from the top so that small
    // terms are added first.
    std::vector<double> tail(static_cast<std::size_t>(order) + 1, 0.0);
    for (int m = order - 1; m >= 0; --m) {
        const double v = jm[static_cast<std::size_t>(m) + 1];
        tail[static_cast<std::size_t>(m)] = tail[static_cast<std::size_t>(m) + 1] + 2.0 * v * v;
    }
    int B = 0;
    while (B < order && !(tail[static_cast<std::size_t>(B)] < tol))
        ++B;
    return BesselBand::with_half_width(kick_argument, B);
}

} // namespace qkr

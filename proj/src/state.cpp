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

#include "qkr/state.hpp"

#include "qkr/error.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <type_traits>

namespace qkr {

RotorState::RotorState(int half_width, double hbar) : half_width_(half_width), hbar_(hbar)
{
    if (half_width < 1)
        throw InvalidArgument("basis half width L must be >= 1, got " + std::to_string(half_width));
    if (!(hbar > 0.0) || !std::isfinite(hbar))
        throw InvalidArgument("hbar must be positive and finite");
    amplitudes_.assign(static_cast<std::size_t>(2 * half_width + 1), cdouble{0.0, 0.0});
}

double RotorState::norm() const
{
    double s = 0.0;
    for (const auto& a : amplitudes_)
        s += probability(a);
    return s;
}

double RotorState::edge_mass() const
{
    return probability(amplitudes_.front()) + probability(amplitudes_.back());
}

cdouble rotate_preserving_modulus(cdouble a, cdouble unit)
{
    const cdouble z = a * unit;
    const double target = probability(a);
    if (probability(z) == target)
        return z;
    constexpr double inf = std::numeric_limits<double>::infinity();
    auto step = [](double v, int n) {
        for (; n > 0; --n)
            v = std::nextafter(v, inf);
        for (; n < 0; ++n)
            v = std::nextafter(v, -inf);
        return v;
    };
    // Move one component outward ulp by ulp, solve the other from the
    // remaining probability, and keep the candidate closest to z at the
    // first distance that yields one. Parity effects in the rounded squares
    // occasionally push the first hit hundreds of ulps out.
    double moved[2][2] = {{z.real(), z.real()}, {z.imag(), z.imag()}}; // [component][direction]
    cdouble best = z;
    double best_dist = inf;
    for (int d = 0; d <= kMaxModulusNudge; ++d) {
        for (int comp = 0; comp < 2; ++comp) {
            for (int dir = 0; dir < 2; ++dir) {
                if (d > 0)
                    moved[comp][dir] = std::nextafter(moved[comp][dir], dir == 0 ? inf : -inf);
                const double x = moved[comp][dir];
                const double rem = target - x * x;
                if (rem < 0.0)
                    continue;
                const double y0 = std::copysign(std::sqrt(rem), comp == 0 ? z.imag() : z.real());
                for (int dy = -4; dy <= 4; ++dy) {
                    const double y = step(y0, dy);
                    const cdouble c = comp == 0 ? cdouble{x, y} : cdouble{y, x};
                    if (probability(c) != target)
                        continue;
                    const double dist = std::abs(c - z);
                    if (dist < best_dist) {
                        best = c;
                        best_dist = dist;
                    }
                }
            }
        }
        if (best_dist < inf)
            return best;
    }
    return z;
}

namespace {

RotorState make_eigenstate(const MomentumEigenstate& s, int L, double hbar)
{
    if (s.l0 < -L || s.l0 > L)
        throw InvalidArgument("momentum eigenstate l0 = " + std::to_string(s.l0) +
                              " lies outside the basis [-L, L]");
    RotorState state(L, hbar);
    state[s.l0] = 1.0;
    return state;
}

RotorState make_packet(const GaussianPacket& g, int L, double hbar)
{
    if (!(g.sigma > 0.0) || !std::isfinite(g.sigma))
        throw InvalidArgument("gaussian packet width sigma must be positive");
    if (!(std::abs(g.l0) + 4.0 * g.sigma < L))
        throw InvalidArgument("gaussian packet does not fit the basis: need |l0| + 4 sigma < L");
    RotorState state(L, hbar);
    // Real, unnormalized profile first; the sum runs in a fixed order so that
    // repeated construction is bit-identical.
    double total = 0.0;
    for (int l = -L; l <= L; ++l) {
        const double x = (l - g.l0) / g.sigma;
        const double a = std::exp(-0.25 * x * x);
        state[l] = a;
        total += a * a;
    }
    const double scale = 1.0 / std::sqrt(total);
    for (auto& a : state.amplitudes())
        a *= scale;
    return state;
}

} // namespace

RotorState new_state(const InitialStateSpec& spec, int half_width, double hbar)
{
    if (half_width < 1)
        throw InvalidArgument("basis half width L must be >= 1, got " + std::to_string(half_width));
    if (!(hbar > 0.0))
        throw InvalidArgument("hbar must be positive");
    return std::visit(
        [&](const auto& s) -> RotorState {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MomentumEigenstate>)
                return make_eigenstate(s, half_width, hbar);
            else
                return make_packet(s, half_width, hbar);
        },
        spec);
}

NormReport renormalize_check(const RotorState& state, double norm_tol, double edge_budget)
{
    if (!(norm_tol > 0.0))
        throw InvalidArgument("norm tolerance must be positive");
    NormReport r{};
    r.norm = state.norm();
    r.norm_error = std::abs(1.0 - r.norm);
    r.edge_mass = state.edge_mass();
    r.ok = r.norm_error <= norm_tol && r.edge_mass <= edge_budget;
    return r;
}

} // namespace qkr

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

#include "qkr/observables.hpp"

#include "qkr/error.hpp"

#include <algorithm>
#include <cmath>

namespace qkr {

namespace {

void check_delta(double delta)
{
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidArgument("presence threshold delta must lie in (0, 1)");
}

void check_compatible(const RotorState& a, const RotorState& b)
{
    if (a.half_width() != b.half_width())
        throw InvalidArgument("fidelity: states live on different bases");
    if (a.hbar() != b.hbar())
        throw InvalidArgument("fidelity: states carry different hbar");
}

} // namespace

double n2_expectation(const RotorState& state)
{
    const int L = state.half_width();
    double s = 0.0;
    for (int l = -L; l <= L; ++l) {
        const double ld = l;
        s += ld * ld * probability(state[l]);
    }
    return s;
}

double shannon_entropy(const RotorState& state)
{
    double s = 0.0;
    for (const auto& a : state.amplitudes()) {
        const double p = probability(a);
        if (p > 0.0)
            s -= p * std::log(p);
    }
    return s;
}

double participation_ratio(const RotorState& state)
{
    double s = 0.0;
    for (const auto& a : state.amplitudes()) {
        const double p = probability(a);
        s += p * p;
    }
    return 1.0 / s;
}

int lmax(const RotorState& state, double delta)
{
    check_delta(delta);
    const int L = state.half_width();
    for (int m = L; m >= 0; --m) {
        if (probability(state[m]) > delta || probability(state[-m]) > delta)
            return m;
    }
    throw InvalidArgument("lmax: no component exceeds delta; delta is too large for this state");
}

double threshold_estimate(const RotorState& state, double delta)
{
    const int m = lmax(state, delta);
    if (m == 0)
        throw InvalidArgument("threshold estimate undefined: lmax = 0");
    return 1.0 / m;
}

double fidelity(const RotorState& a, const RotorState& b)
{
    check_compatible(a, b);
    cdouble s{0.0, 0.0};
    auto x = a.amplitudes();
    auto y = b.amplitudes();
    for (std::size_t i = 0; i < x.size(); ++i)
        s += std::conj(x[i]) * y[i];
    return std::clamp(std::norm(s), 0.0, 1.0);
}

void ObservableSeries::record(long kick_index, const RotorState& state, double delta,
                              const RotorState* reference)
{
    check_delta(delta);
    if (!empty() && fidelity.has_value() != (reference != nullptr))
        throw InvalidArgument("series record: fidelity reference must be given for every sample or none");
    const int L = state.half_width();
    double norm = 0.0, n2sum = 0.0, ent = 0.0, p2 = 0.0;
    int top = -1;
    for (int l = -L; l <= L; ++l) {
        const double p = probability(state[l]);
        const double ld = l;
        norm += p;
        n2sum += ld * ld * p;
        p2 += p * p;
        if (p > 0.0)
            ent -= p * std::log(p);
        if (p > delta)
            top = std::max(top, std::abs(l));
    }
    if (top < 0)
        throw InvalidArgument("lmax: no component exceeds delta; delta is too large for this state");

    kick.push_back(kick_index);
    time.push_back(state.time());
    n2.push_back(n2sum);
    entropy.push_back(ent);
    participation.push_back(1.0 / p2);
    lmax.push_back(top);
    norm_error.push_back(std::abs(1.0 - norm));
    if (reference) {
        if (!fidelity)
            fidelity.emplace();
        fidelity->push_back(qkr::fidelity(*reference, state));
    }
}

} // namespace qkr

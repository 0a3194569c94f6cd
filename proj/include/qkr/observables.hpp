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

#include <optional>
#include <vector>

namespace qkr {

inline constexpr double kDefaultDelta = 1e-8;

// <n^2> = sum_l l^2 |a_l|^2
double n2_expectation(const RotorState& state);

// -sum |a_l|^2 ln |a_l|^2 over nonzero components (nats).
double shannon_entropy(const RotorState& state);

// 1 / sum |a_l|^4
double participation_ratio(const RotorState& state);

// Largest |l| with |a_l|^2 > delta. Throws InvalidArgument if delta is not
// in (0, 1) or if no component qualifies.
int lmax(const RotorState& state, double delta);

// 1 / lmax(state, delta). Throws InvalidArgument when lmax is 0.
double threshold_estimate(const RotorState& state, double delta);

// |<a|b>|^2. Throws InvalidArgument on mismatched L or hbar.
double fidelity(const RotorState& a, const RotorState& b);

// Per-sample record of a run. `kick` is the protocol step counter, which
// keeps increasing through a reversed leg; `time` is the state's physical
// clock, which runs backwards there.
struct ObservableSeries {
    std::vector<long> kick;
    std::vector<double> time;
    std::vector<double> n2;
    std::vector<double> entropy;
    std::vector<double> participation;
    std::vector<int> lmax;
    std::vector<double> norm_error;
    std::optional<std::vector<double>> fidelity;
    // Protocol step at which time was reversed, for reversal runs.
    std::optional<long> break_kick;

    std::size_t size() const noexcept { return kick.size(); }
    bool empty() const noexcept { return kick.empty(); }

    // Appends one sample computed in a single pass over the amplitudes. A
    // fidelity reference is given for every sample or for none.
    void record(long kick_index, const RotorState& state, double delta,
                const RotorState* reference = nullptr);

    bool operator==(const ObservableSeries&) const = default;
};

} // namespace qkr

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

#include <cstdint>
#include <vector>

namespace qkr {

// Dense one-step matrix on the truncated basis, row-major, index l + L:
//   U(l, j) = i^{-(j-l)} exp(-i hbar j^2 dt / 2) J_{j-l}(K / hbar).
std::vector<cdouble> dense_step_matrix(int half_width, double kick_strength, double hbar,
                                       double dt);

// Normalized state with independent complex Gaussian amplitudes.
RotorState random_state(int half_width, double hbar, std::uint64_t seed);

struct ValidationCase {
    double kick_argument = 0.0;
    double dense_vs_bessel = 0.0;    // max |a_l| difference
    double bessel_vs_spectral = 0.0; // L2 norm of the difference
};

struct ValidationReport {
    int half_width = 0;
    std::vector<ValidationCase> cases;
    double dense_tolerance = 1e-12;
    double spectral_tolerance = 1e-10;
    bool ok = false;
};

// Compares the untruncated banded step against the dense matrix and the
// spectral step against the banded one on random states. The spectral grid
// is at least 4L + 1 points, so aliased couplings sit beyond offset 2L.
ValidationReport run_validation(int half_width = 32,
                                const std::vector<double>& kick_arguments = {0.5, 2.0, 5.0},
                                int states_per_case = 4, std::uint64_t seed = 20260101);

} // namespace qkr

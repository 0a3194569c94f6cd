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

#include "qkr/bessel.hpp"
#include "qkr/state.hpp"

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

// One step of the kicked-rotor map: free rotation over the gap dt followed by
// a kick of strength K,
//
//   a_l <- sum_j i^{-(j-l)} exp(-i hbar j^2 dt / 2) J_{j-l}(K/hbar) a_j.
//
// The free phase carries the pre-kick index j. The adjoint applies the
// conjugate kick first and then the conjugate free phase.

namespace qkr {

inline constexpr double kDefaultBandTolerance = 1e-30;

struct StepParams {
    double kick_strength = 5.0; // K
    double hbar = 1.0;
    double dt = 1.0;

    double kick_argument() const { return kick_strength / hbar; }
    // K >= 0, hbar > 0, dt > 0. K = 0 is accepted as the free-rotor limit.
    void validate() const;
};

enum class PropagatorKind { bessel, spectral };

std::string_view to_string(PropagatorKind kind);
PropagatorKind propagator_kind_from_string(std::string_view name);

// Smallest 5-smooth integer >= 2L + 1.
int default_grid_size(int half_width);

// exp(-i hbar l^2 dt / 2) for l = 0 .. L (the phase is even in l).
void free_phases(double hbar, double dt, int half_width, std::vector<cdouble>& out);

// Stateful engines used by the experiment runner. forward() and adjoint()
// advance/rewind the state's clock and throw LeakageError when the edge
// occupancy exceeds the budget after the step.
class Propagator {
public:
    virtual ~Propagator() = default;

    virtual PropagatorKind kind() const noexcept = 0;
    virtual void forward(RotorState& state, double dt) = 0;
    virtual void adjoint(RotorState& state, double dt) = 0;

    int half_width() const noexcept { return half_width_; }
    double kick_strength() const noexcept { return kick_strength_; }
    double hbar() const noexcept { return hbar_; }
    double edge_budget() const noexcept { return edge_budget_; }

protected:
    Propagator(int half_width, double kick_strength, double hbar, double edge_budget);

    void check_state(const RotorState& state) const;
    void check_edges(const RotorState& state) const;
    const std::vector<cdouble>& phases_for(double dt);

private:
    int half_width_;
    double kick_strength_;
    double hbar_;
    double edge_budget_;
    std::uint64_t cached_dt_bits_ = 0;
    bool have_cache_ = false;
    std::vector<cdouble> phases_;
};

// Banded product with the truncated Bessel column. O((2L+1)(2B+1)) per step.
class BesselPropagator final : public Propagator {
public:
    BesselPropagator(int half_width, double kick_strength, double hbar, BesselBand band,
                     double edge_budget = kDefaultEdgeBudget);

    PropagatorKind kind() const noexcept override { return PropagatorKind::bessel; }
    const BesselBand& band() const noexcept { return band_; }

    void forward(RotorState& state, double dt) override;
    void adjoint(RotorState& state, double dt) override;

private:
    BesselBand band_;
    std::vector<cdouble> scratch_;
};

// Split-operator step: momentum-diagonal free phase, transform to an N-point
// angle grid, angle-diagonal kick phase, transform back. O(N log N) per step.
class SpectralPropagator final : public Propagator {
public:
    SpectralPropagator(int half_width, double kick_strength, double hbar, int grid_size,
                       double edge_budget = kDefaultEdgeBudget);
    ~SpectralPropagator() override;
    SpectralPropagator(const SpectralPropagator&) = delete;
    SpectralPropagator& operator=(const SpectralPropagator&) = delete;

    PropagatorKind kind() const noexcept override { return PropagatorKind::spectral; }
    int grid_size() const noexcept { return grid_size_; }

    void forward(RotorState& state, double dt) override;
    void adjoint(RotorState& state, double dt) override;

private:
    void scatter(const RotorState& state, const cdouble* phase, bool conjugate_phase);
    void transform_kick_transform(bool conjugate_kick);
    void gather(RotorState& state, const cdouble* phase, bool conjugate_phase);

    int grid_size_;
    std::vector<cdouble> kick_;   // exp(-i (K/hbar) cos theta_k) / N
    cdouble* buffer_ = nullptr; // fftw_malloc'd, grid_size_ entries
    void* to_angle_ = nullptr;  // fftw_plan, backward (+i) transform
    void* to_momentum_ = nullptr;
};

struct EngineSettings {
    PropagatorKind kind = PropagatorKind::spectral;
    int grid_size = 0;      // 0 selects default_grid_size(L)
    double band_tolerance = kDefaultBandTolerance;
    double edge_budget = kDefaultEdgeBudget;
    bool operator==(const EngineSettings&) const = default;
};

std::unique_ptr<Propagator> make_propagator(int half_width, double kick_strength, double hbar,
                                            const EngineSettings& settings);

// Single-step entry points. Each validates its inputs and builds whatever
// engine state it needs; the experiment runner uses the classes above.
void step_bessel(RotorState& state, const StepParams& p, const BesselBand& band,
                 double edge_budget = kDefaultEdgeBudget);
void step_spectral(RotorState& state, const StepParams& p, int grid_size,
                   double edge_budget = kDefaultEdgeBudget);
void step_adjoint(RotorState& state, const StepParams& p, PropagatorKind impl,
                  double edge_budget = kDefaultEdgeBudget);
void step_adjoint_bessel(RotorState& state, const StepParams& p, const BesselBand& band,
                         double edge_budget = kDefaultEdgeBudget);
void step_adjoint_spectral(RotorState& state, const StepParams& p, int grid_size,
                           double edge_budget = kDefaultEdgeBudget);

} // namespace qkr

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

#include "qkr/propagator.hpp"

#include "qkr/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>

namespace qkr {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

bool is_5_smooth(int n)
{
    for (int p : {2, 3, 5})
        while (n % p == 0)
            n /= p;
    return n == 1;
}

fftw_complex* as_fftw(cdouble* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

void StepParams::validate() const
{
    if (!(kick_strength >= 0.0) || !std::isfinite(kick_strength))
        throw InvalidArgument("kick strength K must be finite and >= 0");
    if (!(hbar > 0.0) || !std::isfinite(hbar))
        throw InvalidArgument("hbar must be positive and finite");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidArgument("step gap dt must be positive and finite");
}

std::string_view to_string(PropagatorKind kind)
{
    return kind == PropagatorKind::bessel ? "bessel" : "spectral";
}

PropagatorKind propagator_kind_from_string(std::string_view name)
{
    if (name == "bessel")
        return PropagatorKind::bessel;
    if (name == "spectral")
        return PropagatorKind::spectral;
    throw InvalidArgument("unknown propagator '" + std::string(name) + "' (expected bessel|spectral)");
}

int default_grid_size(int half_width)
{
    int n = 2 * half_width + 1;
    while (!is_5_smooth(n))
        ++n;
    return n;
}

void free_phases(double hbar, double dt, int half_width, std::vector<cdouble>& out)
{
    out.resize(static_cast<std::size_t>(half_width) + 1);
    const double c = 0.5 * hbar * dt;
    for (int l = 0; l <= half_width; ++l) {
        const double l2 = static_cast<double>(l) * static_cast<double>(l);
        const double phi = -c * l2;
        out[static_cast<std::size_t>(l)] = {std::cos(phi), std::sin(phi)};
    }
}

// ---------------------------------------------------------------------------
// Propagator base

Propagator::Propagator(int half_width, double kick_strength, double hbar, double edge_budget)
    : half_width_(half_width), kick_strength_(kick_strength), hbar_(hbar), edge_budget_(edge_budget)
{
    if (half_width < 1)
        throw InvalidArgument("propagator basis half width must be >= 1");
    StepParams{kick_strength, hbar, 1.0}.validate();
    if (!(edge_budget > 0.0))
        throw InvalidArgument("edge budget must be positive");
}

void Propagator::check_state(const RotorState& state) const
{
    if (state.half_width() != half_width_)
        throw InvalidArgument("state basis L = " + std::to_string(state.half_width()) +
                              " does not match propagator L = " + std::to_string(half_width_));
    if (state.hbar() != hbar_)
        throw InvalidArgument("state hbar does not match propagator hbar");
}

void Propagator::check_edges(const RotorState& state) const
{
    const double edge = state.edge_mass();
    if (!(edge <= edge_budget_)) {
        std::ostringstream os;
        os.precision(3);
        os << "basis leakage: edge mass " << edge << " exceeds budget " << edge_budget_
           << " at kick " << state.kick_count() << " (L = " << half_width_ << ")";
        throw LeakageError(os.str(), edge, state.kick_count());
    }
}

const std::vector<cdouble>& Propagator::phases_for(double dt)
{
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw InvalidArgument("step gap dt must be positive and finite");
    const auto bits = std::bit_cast<std::uint64_t>(dt);
    if (!have_cache_ || bits != cached_dt_bits_) {
        free_phases(hbar_, dt, half_width_, phases_);
        cached_dt_bits_ = bits;
        have_cache_ = true;
    }
    return phases_;
}

// ---------------------------------------------------------------------------
// Bessel band

BesselPropagator::BesselPropagator(int half_width, double kick_strength, double hbar,
                                   BesselBand band, double edge_budget)
    : Propagator(half_width, kick_strength, hbar, edge_budget), band_(std::move(band)),
      scratch_(static_cast<std::size_t>(2 * half_width + 1))
{
    if (band_.kick_argument() != kick_strength / hbar)
        throw InvalidArgument("Bessel band was built for K/hbar = " +
                              std::to_string(band_.kick_argument()) + ", step needs " +
                              std::to_string(kick_strength / hbar));
}

void BesselPropagator::forward(RotorState& state, double dt)
{
    check_state(state);
    const auto& ph = phases_for(dt);
    const int L = half_width();
    const int B = band_.half_width();
    auto a = state.amplitudes();
    for (int j = -L; j <= L; ++j)
        scratch_[static_cast<std::size_t>(j + L)] = ph[static_cast<std::size_t>(std::abs(j))] * a[static_cast<std::size_t>(j + L)];

    const cdouble* c = band_.coefficients().data() + B; // c[m], m in [-B, B]
    for (int l = -L; l <= L; ++l) {
        const int m_lo = std::max(-B, -L - l);
        const int m_hi = std::min(B, L - l);
        cdouble acc{0.0, 0.0};
        const cdouble* src = scratch_.data() + (l + L);
        for (int m = m_lo; m <= m_hi; ++m)
            acc += c[m] * src[m];
        a[static_cast<std::size_t>(l + L)] = acc;
    }
    state.set_clock(state.time() + dt, state.kick_count() + 1);
    check_edges(state);
}

void BesselPropagator::adjoint(RotorState& state, double dt)
{
    check_state(state);
    const auto& ph = phases_for(dt);
    const int L = half_width();
    const int B = band_.half_width();
    auto a = state.amplitudes();
    std::copy(a.begin(), a.end(), scratch_.begin());

    const cdouble* c = band_.coefficients().data() + B;
    for (int j = -L; j <= L; ++j) {
        // a_j <- sum_m conj(c_m) a_{j-m}
        const int m_lo = std::max(-B, j - L);
        const int m_hi = std::min(B, j + L);
        cdouble acc{0.0, 0.0};
        const cdouble* src = scratch_.data() + (j + L);
        for (int m = m_lo; m <= m_hi; ++m)
            acc += std::conj(c[m]) * src[-m];
        a[static_cast<std::size_t>(j + L)] = std::conj(ph[static_cast<std::size_t>(std::abs(j))]) * acc;
    }
    state.set_clock(state.time() - dt, state.kick_count() - 1);
    check_edges(state);
}

// ---------------------------------------------------------------------------
// Spectral (split-operator)

SpectralPropagator::SpectralPropagator(int half_width, double kick_strength, double hbar,
                                       int grid_size, double edge_budget)
    : Propagator(half_width, kick_strength, hbar, edge_budget), grid_size_(grid_size)
{
    if (grid_size < 2 * half_width + 1)
        throw InvalidArgument("angle grid N = " + std::to_string(grid_size) +
                              " aliases the momentum basis; need N >= 2L + 1 = " +
                              std::to_string(2 * half_width + 1));

    const double k = kick_strength / hbar;
    const double inv_n = 1.0 / grid_size;
    kick_.resize(static_cast<std::size_t>(grid_size));
    for (int i = 0; i < grid_size; ++i) {
        const double theta = 2.0 * std::numbers::pi * i / grid_size;
        const double phi = -k * std::cos(theta);
        kick_[static_cast<std::size_t>(i)] = cdouble{std::cos(phi), std::sin(phi)} * inv_n;
    }

    std::lock_guard lock(planner_mutex());
    buffer_ = static_cast<cdouble*>(fftw_malloc(sizeof(cdouble) * static_cast<std::size_t>(grid_size)));
    if (buffer_ == nullptr)
        throw std::bad_alloc();
    // FFTW_ESTIMATE keeps the chosen algorithm, and therefore every output
    // bit, independent of timing measurements.
    to_angle_ = fftw_plan_dft_1d(grid_size, as_fftw(buffer_), as_fftw(buffer_), FFTW_BACKWARD,
                                 FFTW_ESTIMATE);
    to_momentum_ = fftw_plan_dft_1d(grid_size, as_fftw(buffer_), as_fftw(buffer_), FFTW_FORWARD,
                                    FFTW_ESTIMATE);
    if (to_angle_ == nullptr || to_momentum_ == nullptr) {
        if (to_angle_)
            fftw_destroy_plan(static_cast<fftw_plan>(to_angle_));
        if (to_momentum_)
            fftw_destroy_plan(static_cast<fftw_plan>(to_momentum_));
        fftw_free(buffer_);
        throw std::runtime_error("FFTW could not create a plan for N = " + std::to_string(grid_size));
    }
}

SpectralPropagator::~SpectralPropagator()
{
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(to_angle_));
    fftw_destroy_plan(static_cast<fftw_plan>(to_momentum_));
    fftw_free(buffer_);
}

void SpectralPropagator::scatter(const RotorState& state, const cdouble* phase, bool conjugate_phase)
{
    const int L = half_width();
    const int n = grid_size_;
    auto a = state.amplitudes();
    std::fill(buffer_, buffer_ + n, cdouble{0.0, 0.0});
    for (int l = -L; l <= L; ++l) {
        cdouble v = a[static_cast<std::size_t>(l + L)];
        if (phase)
            v *= conjugate_phase ? std::conj(phase[std::abs(l)]) : phase[std::abs(l)];
        buffer_[l >= 0 ? l : l + n] = v;
    }
}

void SpectralPropagator::transform_kick_transform(bool conjugate_kick)
{
    fftw_execute(static_cast<fftw_plan>(to_angle_));
    const int n = grid_size_;
    if (conjugate_kick) {
        for (int i = 0; i < n; ++i)
            buffer_[i] *= std::conj(kick_[static_cast<std::size_t>(i)]);
    } else {
        for (int i = 0; i < n; ++i)
            buffer_[i] *= kick_[static_cast<std::size_t>(i)];
    }
    fftw_execute(static_cast<fftw_plan>(to_momentum_));
}

void SpectralPropagator::gather(RotorState& state, const cdouble* phase, bool conjugate_phase)
{
    const int L = half_width();
    const int n = grid_size_;
    auto a = state.amplitudes();
    // Components pushed beyond |l| = L are dropped; the edge budget and the
    // norm diagnostic catch any that matter.
    for (int l = -L; l <= L; ++l) {
        cdouble v = buffer_[l >= 0 ? l : l + n];
        if (phase)
            v *= conjugate_phase ? std::conj(phase[std::abs(l)]) : phase[std::abs(l)];
        a[static_cast<std::size_t>(l + L)] = v;
    }
}

void SpectralPropagator::forward(RotorState& state, double dt)
{
    check_state(state);
    const auto& ph = phases_for(dt);
    scatter(state, ph.data(), false);
    transform_kick_transform(false);
    gather(state, nullptr, false);
    state.set_clock(state.time() + dt, state.kick_count() + 1);
    check_edges(state);
}

void SpectralPropagator::adjoint(RotorState& state, double dt)
{
    check_state(state);
    const auto& ph = phases_for(dt);
    scatter(state, nullptr, false);
    transform_kick_transform(true);
    gather(state, ph.data(), true);
    state.set_clock(state.time() - dt, state.kick_count() - 1);
    check_edges(state);
}

// ---------------------------------------------------------------------------

std::unique_ptr<Propagator> make_propagator(int half_width, double kick_strength, double hbar,
                                            const EngineSettings& settings)
{
    if (settings.kind == PropagatorKind::bessel) {
        auto band = build_band(kick_strength / hbar, settings.band_tolerance);
        return std::make_unique<BesselPropagator>(half_width, kick_strength, hbar, std::move(band),
                                                  settings.edge_budget);
    }
    const int n = settings.grid_size > 0 ? settings.grid_size : default_grid_size(half_width);
    return std::make_unique<SpectralPropagator>(half_width, kick_strength, hbar, n,
                                                settings.edge_budget);
}

void step_bessel(RotorState& state, const StepParams& p, const BesselBand& band, double edge_budget)
{
    p.validate();
    if (state.hbar() != p.hbar)
        throw InvalidArgument("step hbar does not match the state's hbar");
    BesselPropagator prop(state.half_width(), p.kick_strength, p.hbar, band, edge_budget);
    prop.forward(state, p.dt);
}

void step_spectral(RotorState& state, const StepParams& p, int grid_size, double edge_budget)
{
    p.validate();
    if (state.hbar() != p.hbar)
        throw InvalidArgument("step hbar does not match the state's hbar");
    SpectralPropagator prop(state.half_width(), p.kick_strength, p.hbar, grid_size, edge_budget);
    prop.forward(state, p.dt);
}

void step_adjoint_bessel(RotorState& state, const StepParams& p, const BesselBand& band,
                         double edge_budget)
{
    p.validate();
    if (state.hbar() != p.hbar)
        throw InvalidArgument("step hbar does not match the state's hbar");
    BesselPropagator prop(state.half_width(), p.kick_strength, p.hbar, band, edge_budget);
    prop.adjoint(state, p.dt);
}

void step_adjoint_spectral(RotorState& state, const StepParams& p, int grid_size, double edge_budget)
{
    p.validate();
    if (state.hbar() != p.hbar)
        throw InvalidArgument("step hbar does not match the state's hbar");
    SpectralPropagator prop(state.half_width(), p.kick_strength, p.hbar, grid_size, edge_budget);
    prop.adjoint(state, p.dt);
}

void step_adjoint(RotorState& state, const StepParams& p, PropagatorKind impl, double edge_budget)
{
    if (impl == PropagatorKind::bessel) {
        p.validate();
        step_adjoint_bessel(state, p, build_band(p.kick_argument(), kDefaultBandTolerance), edge_budget);
    } else {
        step_adjoint_spectral(state, p, default_grid_size(state.half_width()), edge_budget);
    }
}

} // namespace qkr

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

#include "qkr/error.hpp"
#include "qkr/observables.hpp"
#include "qkr/propagator.hpp"
#include "qkr/schedule.hpp"
#include "qkr/state.hpp"

#include <optional>
#include <vector>

namespace qkr {

struct ResumeDetector {
    double rho = 0.1; // relative deviation from the unperturbed retrace
    int window = 5;   // consecutive samples the deviation must persist
    bool operator==(const ResumeDetector&) const = default;
};

struct ExperimentPlan {
    ScheduleMode schedule = QuasiperiodicMode{};
    double kick_strength = 5.0;
    double hbar = 1.0;
    InitialStateSpec initial = MomentumEigenstate{0};
    int half_width = 8192;
    long t_star = 10000;
    double epsilon = 3e-3;
    long total_kicks = 20000;
    long record_every = 10;
    double delta = kDefaultDelta;
    EngineSettings engine;
    double norm_tolerance = kDefaultNormTolerance;
    ResumeDetector detector;

    // Full check, including total_kicks >= 2 t_star.
    void validate() const;
    // Only what a forward run needs; total_kicks may be 0.
    void validate_forward() const;

    bool operator==(const ExperimentPlan&) const = default;
};

// Thrown when a run cannot finish. Carries the samples recorded so far.
class RunAborted : public Error {
public:
    RunAborted(const Error& cause, ObservableSeries partial)
        : Error(cause.category(), cause.what()), partial_(std::move(partial)) {}

    const ObservableSeries& partial() const noexcept { return partial_; }

private:
    ObservableSeries partial_;
};

// theta -> theta + epsilon, i.e. a_l -> a_l exp(i l epsilon). Every |a_l|^2
// is preserved bit-for-bit.
RotorState apply_perturbation(const RotorState& state, double epsilon);

ObservableSeries run_forward(const ExperimentPlan& plan);

// State and forward-leg record at a break kick.
struct BreakPoint {
    long t_star = 0;
    RotorState state;
    ObservableSeries forward;
};

// One forward pass that snapshots the state at every requested break kick
// (sorted ascending). The forward record of each snapshot is the prefix of
// the pass up to that kick.
std::vector<BreakPoint> run_to_breaks(const ExperimentPlan& plan, std::vector<long> t_stars);

// Reversed leg only: perturb the break state by epsilon and replay the
// adjoint steps over the reversed gaps back to t = 0. Protocol kick indices
// continue from t_star.
struct ReversedLeg {
    ObservableSeries series;
    RotorState final_state;
};
ReversedLeg run_reversed_leg(const ExperimentPlan& plan, const BreakPoint& brk, double epsilon);

struct ReversalResult {
    ObservableSeries series;                  // forward + reversed, contiguous kicks
    std::optional<ObservableSeries> baseline; // epsilon = 0 retrace, same layout
    std::optional<long> resume_kick;          // protocol kick, inside the reversed leg
    double final_fidelity = 0.0;
    int lmax_at_break = 0;
    double eps_th_at_break = 0.0;             // 1 / lmax_at_break
};

ReversalResult run_reversal(const ExperimentPlan& plan);
// Same protocol from an existing break point, with an optional shared
// unperturbed retrace.
ReversalResult run_reversal_from(const ExperimentPlan& plan, const BreakPoint& brk, double epsilon,
                                 const ObservableSeries* baseline_leg = nullptr);

// First reversed-leg protocol kick where |n2 - n2_base| > rho * n2_base for
// `window` consecutive samples. Both series must cover the same reversed
// kicks; InvalidArgument otherwise.
std::optional<long> detect_resume(const ObservableSeries& series, const ObservableSeries& baseline,
                                  const ResumeDetector& detector = {});

struct ScanPoint {
    double epsilon = 0.0;
    std::optional<long> resume_kick;
    double final_fidelity = 0.0;
    bool qualifies = false; // resume detected and final fidelity < 0.5
};

struct ScanReport {
    std::vector<ScanPoint> points;   // ascending epsilon, including refinement points
    double eps_th_empirical = 0.0;
    double eps_th_lmax = 0.0;        // 1 / lmax(break state, plan.delta)
    double ratio = 0.0;              // eps_th_empirical / eps_th_lmax
    int lmax_at_break = 0;
    RotorState break_state{1, 1.0};
};

// Smallest epsilon whose reversal both resumes and ends with fidelity < 0.5.
// With refine > 0, the bracketing grid interval is bisected (geometric
// midpoint) that many times and every midpoint joins the grid. Throws InconclusiveScan
// when no grid point, or every grid point, qualifies.
ScanReport threshold_scan(const ExperimentPlan& plan, const std::vector<double>& eps_grid,
                          int refine = 0, int workers = 0);

struct TStarPoint {
    long t_star = 0;
    std::optional<long> resume_kick;
    std::optional<long> delay; // resume_kick - t_star
    double final_fidelity = 0.0;
    double eps_th_at_break = 0.0;
    ObservableSeries series;
    ObservableSeries baseline;
};

// Fixed epsilon, several break kicks, one shared forward pass.
std::vector<TStarPoint> tstar_scan(const ExperimentPlan& plan, const std::vector<long>& t_stars,
                                   int workers = 0);

// Least-squares line through (x, y); r2 is the coefficient of determination.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// n2 fit over the final 80% of the samples; passes when slope > 0 and R^2 > 0.9.
struct GrowthCheck {
    LinearFit fit;
    bool diffusive = false;
};
GrowthCheck check_linear_growth(const ObservableSeries& series);

// Mean n2 over the last 10% of kicks against the 40-50% window; saturated
// when the ratio is below 2.
struct PlateauCheck {
    double late_mean = 0.0;
    double mid_mean = 0.0;
    double ratio = 0.0;
    bool saturated = false;
};
PlateauCheck check_plateau(const ObservableSeries& series);

// First kick where the trailing-window n2 slope drops below `fraction` of the
// initial slope. Requires samples at every kick.
std::optional<long> detect_localization_time(const ObservableSeries& series, int window = 50,
                                             double fraction = 0.05);

struct FreezePoint {
    long t_star = 0;
    int lmax = 0;
    double eps_th = 0.0;
    bool after_localization = false;
};

struct FreezeReport {
    long localization_time = 0;
    std::vector<FreezePoint> points;
    bool decreasing_before = false;  // eps_th strictly decreasing for t* < tau
    double spread_after = 0.0;       // max relative deviation of eps_th for t* > tau
    bool frozen_after = false;       // spread_after < 0.1
    long probe_t_star = 0;           // latest grid point, perturbed at eps_th / 10
    double probe_epsilon = 0.0;
    double probe_final_fidelity = 0.0;
    bool probe_reversible = false;   // probe_final_fidelity > 0.9
    ObservableSeries forward;
};

// Periodic schedules only. The grid must have at least one point on each side
// of the detected localization time; InvalidArgument otherwise, and an
// inconclusive-category Error when no plateau is found within total_kicks.
FreezeReport localization_freeze(const ExperimentPlan& plan, std::vector<long> t_star_grid);

} // namespace qkr

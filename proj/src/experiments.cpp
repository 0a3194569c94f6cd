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

#include "qkr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace qkr {

namespace {

void require(bool cond, const std::string& what)
{
    if (!cond)
        throw InvalidArgument(what);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index is
// independent; the first exception (by index) is rethrown.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn)
{
    std::size_t nthreads = workers > 0 ? static_cast<std::size_t>(workers)
                                       : std::max(1u, std::thread::hardware_concurrency());
    nthreads = std::min(nthreads, n);
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i)
            fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < nthreads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

// Steps the state through schedule events, keeping the clock on the exact
// event times.
class Driver {
public:
    Driver(const ExperimentPlan& plan, long horizon)
        : plan_(plan), schedule_(build_schedule(plan.schedule, std::max<long>(horizon, 1))),
          propagator_(make_propagator(plan.half_width, plan.kick_strength, plan.hbar, plan.engine))
    {
    }

    const KickSchedule& schedule() const { return schedule_; }

    // State has applied `kicks` events; apply event `kicks`.
    void forward(RotorState& state)
    {
        const auto i = static_cast<std::size_t>(state.kick_count());
        propagator_->forward(state, schedule_.gap(i));
        state.set_clock(schedule_.time_of(i), static_cast<long>(i) + 1);
    }

    // Undo event kicks - 1.
    void backward(RotorState& state)
    {
        const auto i = static_cast<std::size_t>(state.kick_count() - 1);
        propagator_->adjoint(state, schedule_.gap(i));
        state.set_clock(i > 0 ? schedule_.time_of(i - 1) : 0.0, static_cast<long>(i));
    }

private:
    const ExperimentPlan& plan_;
    KickSchedule schedule_;
    std::unique_ptr<Propagator> propagator_;
};

void record_checked(ObservableSeries& series, long protocol_kick, const RotorState& state,
                    const ExperimentPlan& plan, const RotorState& reference)
{
    series.record(protocol_kick, state, plan.delta, &reference);
    const double err = series.norm_error.back();
    if (!(err <= plan.norm_tolerance)) {
        std::ostringstream os;
        os.precision(3);
        os << "norm drift " << err << " exceeds tolerance " << plan.norm_tolerance << " at kick "
           << protocol_kick;
        throw RunAborted(Error(ErrorCategory::numerical, os.str()), series);
    }
}

bool sample_due(long protocol_kick, const ExperimentPlan& plan)
{
    return protocol_kick % plan.record_every == 0;
}

void append(ObservableSeries& dst, const ObservableSeries& src)
{
    auto cat = [](auto& a, const auto& b) { a.insert(a.end(), b.begin(), b.end()); };
    cat(dst.kick, src.kick);
    cat(dst.time, src.time);
    cat(dst.n2, src.n2);
    cat(dst.entropy, src.entropy);
    cat(dst.participation, src.participation);
    cat(dst.lmax, src.lmax);
    cat(dst.norm_error, src.norm_error);
    if (src.fidelity) {
        if (!dst.fidelity)
            dst.fidelity.emplace();
        cat(*dst.fidelity, *src.fidelity);
    }
}

int lmax_or_zero(const RotorState& s, double delta)
{
    return lmax(s, delta);
}

double mean_over(const ObservableSeries& s, long lo, long hi)
{
    double sum = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s.kick[i] > lo && s.kick[i] <= hi) {
            sum += s.n2[i];
            ++n;
        }
    }
    return n > 0 ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

} // namespace

// ---------------------------------------------------------------------------

void ExperimentPlan::validate_forward() const
{
    require(kick_strength >= 0.0 && std::isfinite(kick_strength), "K must be finite and >= 0");
    require(hbar > 0.0 && std::isfinite(hbar), "hbar must be positive");
    require(half_width >= 1, "L must be >= 1");
    require(total_kicks >= 0, "total_kicks must be >= 0");
    require(record_every >= 1, "record_every must be >= 1");
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    require(norm_tolerance > 0.0, "norm tolerance must be positive");
    require(engine.edge_budget > 0.0, "edge budget must be positive");
    require(engine.band_tolerance > 0.0, "band tolerance must be positive");
    require(engine.grid_size == 0 || engine.grid_size >= 2 * half_width + 1,
            "grid size must be 0 (automatic) or >= 2L + 1");
    require(detector.rho > 0.0, "detector rho must be positive");
    require(detector.window >= 1, "detector window must be >= 1");
    if (const auto* p = std::get_if<PeriodicMode>(&schedule))
        require(p->period > 0.0 && std::isfinite(p->period), "period T must be positive");
    // Building a one-event schedule runs the commensurability guard.
    (void)build_schedule(schedule, 1);
    // Constructing the initial state checks it against the basis.
    (void)new_state(initial, half_width, hbar);
}

void ExperimentPlan::validate() const
{
    validate_forward();
    require(t_star >= 1, "t_star must be >= 1");
    require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be finite and >= 0");
    require(total_kicks >= 2 * t_star, "total_kicks must be >= 2 t_star so the reversed leg completes");
}

RotorState apply_perturbation(const RotorState& state, double epsilon)
{
    require(std::isfinite(epsilon), "perturbation epsilon must be finite");
    RotorState out = state;
    if (epsilon == 0.0)
        return out;
    const int L = state.half_width();
    for (int l = -L; l <= L; ++l) {
        const double phi = static_cast<double>(l) * epsilon;
        out[l] = rotate_preserving_modulus(state[l], {std::cos(phi), std::sin(phi)});
    }
    return out;
}

ObservableSeries run_forward(const ExperimentPlan& plan)
{
    plan.validate_forward();
    ObservableSeries series;
    if (plan.total_kicks == 0)
        return series;

    const RotorState initial = new_state(plan.initial, plan.half_width, plan.hbar);
    RotorState state = initial;
    Driver driver(plan, plan.total_kicks);
    try {
        for (long k = 1; k <= plan.total_kicks; ++k) {
            driver.forward(state);
            if (sample_due(k, plan))
                record_checked(series, k, state, plan, initial);
        }
    } catch (const RunAborted&) {
        throw;
    } catch (const Error& e) {
        throw RunAborted(e, series);
    }
    return series;
}

std::vector<BreakPoint> run_to_breaks(const ExperimentPlan& plan, std::vector<long> t_stars)
{
    plan.validate_forward();
    require(!t_stars.empty(), "at least one break kick is required");
    std::sort(t_stars.begin(), t_stars.end());
    t_stars.erase(std::unique(t_stars.begin(), t_stars.end()), t_stars.end());
    require(t_stars.front() >= 1, "break kicks must be >= 1");

    const RotorState initial = new_state(plan.initial, plan.half_width, plan.hbar);
    RotorState state = initial;
    Driver driver(plan, t_stars.back());
    ObservableSeries series;
    std::vector<BreakPoint> out;
    out.reserve(t_stars.size());
    std::size_t next = 0;
    try {
        for (long k = 1; k <= t_stars.back(); ++k) {
            driver.forward(state);
            if (sample_due(k, plan))
                record_checked(series, k, state, plan, initial);
            if (k == t_stars[next]) {
                out.push_back({k, state, series});
                ++next;
            }
        }
    } catch (const RunAborted&) {
        throw;
    } catch (const Error& e) {
        throw RunAborted(e, series);
    }
    return out;
}

ReversedLeg run_reversed_leg(const ExperimentPlan& plan, const BreakPoint& brk, double epsilon)
{
    require(epsilon >= 0.0 && std::isfinite(epsilon), "epsilon must be finite and >= 0");
    require(brk.state.kick_count() == brk.t_star, "break state does not sit at its break kick");
    const RotorState initial = new_state(plan.initial, plan.half_width, plan.hbar);
    RotorState state = apply_perturbation(brk.state, epsilon);
    Driver driver(plan, brk.t_star);
    ObservableSeries series;
    series.break_kick = brk.t_star;
    try {
        for (long k = 1; k <= brk.t_star; ++k) {
            driver.backward(state);
            const long protocol = brk.t_star + k;
            if (sample_due(protocol, plan))
                record_checked(series, protocol, state, plan, initial);
        }
    } catch (const RunAborted&) {
        throw;
    } catch (const Error& e) {
        throw RunAborted(e, series);
    }
    return {std::move(series), std::move(state)};
}

ReversalResult run_reversal_from(const ExperimentPlan& plan, const BreakPoint& brk, double epsilon,
                                 const ObservableSeries* baseline_leg)
{
    ReversalResult r;
    const RotorState initial = new_state(plan.initial, plan.half_width, plan.hbar);

    ReversedLeg leg = run_reversed_leg(plan, brk, epsilon);
    r.final_fidelity = fidelity(initial, leg.final_state);
    r.lmax_at_break = lmax_or_zero(brk.state, plan.delta);
    r.eps_th_at_break = r.lmax_at_break > 0 ? 1.0 / r.lmax_at_break
                                            : std::numeric_limits<double>::infinity();

    r.series = brk.forward;
    r.series.break_kick = brk.t_star;
    append(r.series, leg.series);

    if (epsilon == 0.0) {
        r.baseline = r.series;
        r.resume_kick = std::nullopt;
        return r;
    }
    ObservableSeries base = brk.forward;
    base.break_kick = brk.t_star;
    if (baseline_leg) {
        append(base, *baseline_leg);
    } else {
        append(base, run_reversed_leg(plan, brk, 0.0).series);
    }
    r.resume_kick = detect_resume(r.series, base, plan.detector);
    r.baseline = std::move(base);
    return r;
}

ReversalResult run_reversal(const ExperimentPlan& plan)
{
    plan.validate();
    auto breaks = run_to_breaks(plan, {plan.t_star});
    return run_reversal_from(plan, breaks.front(), plan.epsilon);
}

std::optional<long> detect_resume(const ObservableSeries& series, const ObservableSeries& baseline,
                                  const ResumeDetector& detector)
{
    require(detector.rho > 0.0 && detector.window >= 1, "invalid resume detector settings");
    const long brk = series.break_kick.value_or(0);
    require(baseline.break_kick.value_or(0) == brk, "series and baseline break at different kicks");

    auto first_reversed = [brk](const ObservableSeries& s) {
        std::size_t i = 0;
        while (i < s.size() && s.kick[i] <= brk)
            ++i;
        return i;
    };
    const std::size_t i0 = first_reversed(series);
    const std::size_t j0 = first_reversed(baseline);
    const std::size_t n = series.size() - i0;
    require(n == baseline.size() - j0, "series and baseline differ in reversed-leg length");

    int run = 0;
    for (std::size_t k = 0; k < n; ++k) {
        require(series.kick[i0 + k] == baseline.kick[j0 + k],
                "series and baseline sample different kicks");
        const double b = baseline.n2[j0 + k];
        const double dev = std::abs(series.n2[i0 + k] - b);
        if (dev > detector.rho * b) {
            if (++run >= detector.window)
                return series.kick[i0 + k + 1 - static_cast<std::size_t>(detector.window)];
        } else {
            run = 0;
        }
    }
    return std::nullopt;
}

ScanReport threshold_scan(const ExperimentPlan& plan, const std::vector<double>& eps_grid,
                          int refine, int workers)
{
    plan.validate();
    require(!eps_grid.empty(), "epsilon grid is empty");
    require(std::is_sorted(eps_grid.begin(), eps_grid.end()) &&
                std::adjacent_find(eps_grid.begin(), eps_grid.end()) == eps_grid.end(),
            "epsilon grid must be strictly ascending");
    require(eps_grid.front() > 0.0, "epsilon grid must be positive");
    require(refine >= 0, "refine must be >= 0");

    const auto breaks = run_to_breaks(plan, {plan.t_star});
    const BreakPoint& brk = breaks.front();
    const ObservableSeries baseline_leg = run_reversed_leg(plan, brk, 0.0).series;

    auto evaluate = [&](const std::vector<double>& grid) {
        std::vector<ScanPoint> pts(grid.size());
        parallel_for(grid.size(), workers, [&](std::size_t i) {
            const auto r = run_reversal_from(plan, brk, grid[i], &baseline_leg);
            pts[i] = {grid[i], r.resume_kick, r.final_fidelity,
                      r.resume_kick.has_value() && r.final_fidelity < 0.5};
        });
        return pts;
    };

    ScanReport report;
    report.points = evaluate(eps_grid);
    const auto qualifies = [](const ScanPoint& p) { return p.qualifies; };
    const auto n_qual = std::count_if(report.points.begin(), report.points.end(), qualifies);
    if (n_qual == 0)
        throw InconclusiveScan(InconclusiveScan::Side::lower,
                               "threshold scan inconclusive: no grid epsilon breaks reversibility");
    if (static_cast<std::size_t>(n_qual) == report.points.size())
        throw InconclusiveScan(InconclusiveScan::Side::upper,
                               "threshold scan inconclusive: every grid epsilon breaks reversibility");

    const auto first = std::find_if(report.points.begin(), report.points.end(), qualifies);
    if (refine > 0 && first != report.points.begin()) {
        double lo = std::prev(first)->epsilon;
        double hi = first->epsilon;
        for (int k = 0; k < refine; ++k) {
            const double mid = std::sqrt(lo * hi);
            const ScanPoint p = evaluate({mid}).front();
            report.points.push_back(p);
            (p.qualifies ? hi : lo) = mid;
        }
        std::sort(report.points.begin(), report.points.end(),
                  [](const ScanPoint& a, const ScanPoint& b) { return a.epsilon < b.epsilon; });
    }

    report.eps_th_empirical =
        std::find_if(report.points.begin(), report.points.end(), qualifies)->epsilon;
    report.lmax_at_break = lmax(brk.state, plan.delta);
    report.eps_th_lmax = report.lmax_at_break > 0 ? 1.0 / report.lmax_at_break
                                                 : std::numeric_limits<double>::infinity();
    report.ratio = report.eps_th_empirical / report.eps_th_lmax;
    report.break_state = brk.state;
    return report;
}

std::vector<TStarPoint> tstar_scan(const ExperimentPlan& plan, const std::vector<long>& t_stars,
                                   int workers)
{
    plan.validate_forward();
    require(!t_stars.empty(), "t* grid is empty");
    require(plan.epsilon >= 0.0, "epsilon must be >= 0");
    const auto breaks = run_to_breaks(plan, t_stars);

    std::vector<TStarPoint> out(breaks.size());
    parallel_for(breaks.size(), workers, [&](std::size_t i) {
        const BreakPoint& brk = breaks[i];
        auto r = run_reversal_from(plan, brk, plan.epsilon);
        TStarPoint& p = out[i];
        p.t_star = brk.t_star;
        p.resume_kick = r.resume_kick;
        if (r.resume_kick)
            p.delay = *r.resume_kick - brk.t_star;
        p.final_fidelity = r.final_fidelity;
        p.eps_th_at_break = r.eps_th_at_break;
        p.series = std::move(r.series);
        p.baseline = r.baseline ? std::move(*r.baseline) : p.series;
    });
    return out;
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y)
{
    require(x.size() == y.size() && x.size() >= 2, "fit_line needs two or more paired points");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LinearFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    f.r2 = (sxx > 0.0 && syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 0.0;
    return f;
}

GrowthCheck check_linear_growth(const ObservableSeries& series)
{
    require(series.size() >= 5, "growth check needs at least 5 samples");
    const long last = series.kick.back();
    const double cut = 0.2 * static_cast<double>(last);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (static_cast<double>(series.kick[i]) >= cut) {
            x.push_back(static_cast<double>(series.kick[i]));
            y.push_back(series.n2[i]);
        }
    }
    GrowthCheck g;
    g.fit = fit_line(x, y);
    g.diffusive = g.fit.slope > 0.0 && g.fit.r2 > 0.9;
    return g;
}

PlateauCheck check_plateau(const ObservableSeries& series)
{
    require(series.size() >= 20, "plateau check needs at least 20 samples");
    const long last = series.kick.back();
    PlateauCheck p;
    p.late_mean = mean_over(series, static_cast<long>(0.9 * last), last);
    p.mid_mean = mean_over(series, static_cast<long>(0.4 * last), static_cast<long>(0.5 * last));
    p.ratio = p.late_mean / p.mid_mean;
    p.saturated = p.ratio < 2.0;
    return p;
}

std::optional<long> detect_localization_time(const ObservableSeries& series, int window,
                                             double fraction)
{
    require(window >= 3, "localization window must be >= 3 samples");
    require(series.size() >= static_cast<std::size_t>(2 * window), "series too short for the window");
    auto slope_at = [&](std::size_t end) {
        std::vector<double> x, y;
        for (std::size_t i = end + 1 - static_cast<std::size_t>(window); i <= end; ++i) {
            x.push_back(static_cast<double>(series.kick[i]));
            y.push_back(series.n2[i]);
        }
        return fit_line(x, y).slope;
    };
    const double initial = slope_at(static_cast<std::size_t>(window) - 1);
    if (!(initial > 0.0))
        return std::nullopt;
    for (std::size_t end = 2 * static_cast<std::size_t>(window) - 1; end < series.size(); ++end) {
        if (slope_at(end) < fraction * initial)
            return series.kick[end];
    }
    return std::nullopt;
}

FreezeReport localization_freeze(const ExperimentPlan& plan, std::vector<long> t_star_grid)
{
    require(std::holds_alternative<PeriodicMode>(plan.schedule),
            "localization_freeze needs a periodic schedule");
    require(t_star_grid.size() >= 2, "t* grid needs at least two points");
    std::sort(t_star_grid.begin(), t_star_grid.end());
    require(t_star_grid.front() >= 1, "t* grid must be positive");
    require(t_star_grid.back() <= plan.total_kicks, "t* grid exceeds total_kicks");

    ExperimentPlan every_kick = plan;
    every_kick.record_every = 1;
    std::vector<long> stops = t_star_grid;
    stops.push_back(plan.total_kicks);
    const auto breaks = run_to_breaks(every_kick, stops);

    FreezeReport rep;
    rep.forward = breaks.back().forward;
    const auto tau = detect_localization_time(rep.forward);
    if (!tau)
        throw Error(ErrorCategory::inconclusive,
                    "no localization plateau detected within " + std::to_string(plan.total_kicks) +
                        " kicks");
    rep.localization_time = *tau;

    for (const auto& b : breaks) {
        if (std::find(t_star_grid.begin(), t_star_grid.end(), b.t_star) == t_star_grid.end())
            continue;
        FreezePoint p;
        p.t_star = b.t_star;
        p.lmax = lmax(b.state, plan.delta);
        p.eps_th = p.lmax > 0 ? 1.0 / p.lmax : std::numeric_limits<double>::infinity();
        p.after_localization = b.t_star > *tau;
        rep.points.push_back(p);
    }
    const auto n_before = std::count_if(rep.points.begin(), rep.points.end(),
                                        [](const FreezePoint& p) { return !p.after_localization; });
    const auto n_after = static_cast<long>(rep.points.size()) - n_before;
    if (n_before < 1 || n_after < 1)
        throw InvalidArgument("t* grid does not straddle the localization time " +
                              std::to_string(*tau));

    rep.decreasing_before = true;
    for (std::size_t i = 1; i < rep.points.size(); ++i) {
        if (!rep.points[i].after_localization && !(rep.points[i].eps_th < rep.points[i - 1].eps_th))
            rep.decreasing_before = false;
    }
    double ref = 0.0;
    rep.spread_after = 0.0;
    for (const auto& p : rep.points) {
        if (!p.after_localization)
            continue;
        if (ref == 0.0) {
            ref = p.eps_th;
            continue;
        }
        rep.spread_after = std::max(rep.spread_after, std::abs(p.eps_th - ref) / ref);
    }
    rep.frozen_after = rep.spread_after < 0.1;

    const BreakPoint* probe = nullptr;
    for (const auto& b : breaks)
        if (b.t_star == t_star_grid.back())
            probe = &b;
    rep.probe_t_star = probe->t_star;
    rep.probe_epsilon = rep.points.back().eps_th / 10.0;
    ExperimentPlan sparse = plan;
    BreakPoint probe_brk{probe->t_star, probe->state, {}};
    rep.probe_final_fidelity =
        fidelity(new_state(plan.initial, plan.half_width, plan.hbar),
                 run_reversed_leg(sparse, probe_brk, rep.probe_epsilon).final_state);
    rep.probe_reversible = rep.probe_final_fidelity > 0.9;
    return rep;
}

} // namespace qkr

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

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace qkr {

// Second-comb period. The golden ratio is kept symbolically and evaluated on
// use; any other value is stored as given and must pass the commensurability
// guard.
struct PeriodSpec {
    enum class Kind { value, golden_ratio };
    Kind kind = Kind::value;
    double value = 1.0; // used only for Kind::value

    static PeriodSpec golden() { return {Kind::golden_ratio, 0.0}; }
    static PeriodSpec of(double v) { return {Kind::value, v}; }

    double evaluate() const;
    bool operator==(const PeriodSpec&) const = default;
};

struct PeriodicMode {
    double period = 1.0;
    bool operator==(const PeriodicMode&) const = default;
};

struct QuasiperiodicMode {
    double period1 = 1.0;
    PeriodSpec period2 = PeriodSpec::golden();
    bool operator==(const QuasiperiodicMode&) const = default;
};

using ScheduleMode = std::variant<PeriodicMode, QuasiperiodicMode>;

// One kick. Exactly one of n1, n2 is nonzero: the event is kick n1 of the
// T1 comb or kick n2 of the T2 comb.
struct KickEvent {
    std::int64_t n1 = 0;
    std::int64_t n2 = 0;
    bool operator==(const KickEvent&) const = default;
};

class KickSchedule {
public:
    const ScheduleMode& mode() const noexcept { return mode_; }
    std::span<const KickEvent> events() const noexcept { return events_; }
    std::size_t size() const noexcept { return events_.size(); }

    // index * period, evaluated fresh; never an accumulated sum.
    double time_of(std::size_t i) const;

    // Gap preceding event i; gap 0 is measured from t = 0.
    double gap(std::size_t i) const { return gaps_[i]; }
    std::span<const double> gaps() const noexcept { return gaps_; }

    // FNV-1a over the bit patterns of every evaluated event time.
    std::uint64_t digest() const;

private:
    friend KickSchedule build_schedule(const ScheduleMode&, std::int64_t);

    ScheduleMode mode_;
    double period1_ = 1.0;
    double period2_ = 0.0;
    std::vector<KickEvent> events_;
    std::vector<double> gaps_;
};

// Throws InvalidArgument for horizon < 1 or non-positive periods, and when
// T2/T1 is within roundoff of a rational p/q with q <= 10^6.
KickSchedule build_schedule(const ScheduleMode& mode, std::int64_t horizon_kicks);

// Inter-kick gaps of a schedule. Throws InvalidArgument on an empty schedule.
std::vector<double> gaps(const KickSchedule& schedule);

// Returns {p, q} if x is within 8 ulps of p/q for some q <= max_denominator,
// otherwise {0, 0}.
struct Rational {
    std::int64_t p = 0;
    std::int64_t q = 0;
};
Rational rational_approximation(double x, std::int64_t max_denominator);

std::string describe(const ScheduleMode& mode);

} // namespace qkr

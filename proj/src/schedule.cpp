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

#include "qkr/schedule.hpp"

#include "qkr/error.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>

namespace qkr {

namespace {

constexpr std::int64_t kMaxCommensurateDenominator = 1'000'000;

bool valid_period(double t) { return t > 0.0 && std::isfinite(t); }

} // namespace

double PeriodSpec::evaluate() const
{
    if (kind == Kind::golden_ratio)
        return 0.5 * (1.0 + std::sqrt(5.0));
    return value;
}

Rational rational_approximation(double x, std::int64_t max_denominator)
{
    if (!std::isfinite(x))
        return {};
    const double tol = 8.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x));
    // Convergents h/k of the continued fraction of x.
    std::int64_t h_prev = 1, h = static_cast<std::int64_t>(std::floor(x));
    std::int64_t k_prev = 0, k = 1;
    double rem = x - std::floor(x);
    for (int iter = 0; iter < 64; ++iter) {
        if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol)
            return {h, k};
        if (rem == 0.0)
            break;
        const double inv = 1.0 / rem;
        const double a_real = std::floor(inv);
        if (a_real > 1e12)
            break;
        const auto a = static_cast<std::int64_t>(a_real);
        rem = inv - a_real;
        const std::int64_t h_next = a * h + h_prev;
        const std::int64_t k_next = a * k + k_prev;
        if (k_next > max_denominator)
            break;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    return {};
}

double KickSchedule::time_of(std::size_t i) const
{
    const KickEvent& e = events_[i];
    return e.n1 != 0 ? static_cast<double>(e.n1) * period1_
                     : static_cast<double>(e.n2) * period2_;
}

std::uint64_t KickSchedule::digest() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < events_.size(); ++i) {
        auto bits = std::bit_cast<std::uint64_t>(time_of(i));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xffU;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

KickSchedule build_schedule(const ScheduleMode& mode, std::int64_t horizon_kicks)
{
    if (horizon_kicks < 1)
        throw InvalidArgument("schedule horizon must be >= 1 kick");

    KickSchedule s;
    s.mode_ = mode;
    s.events_.reserve(static_cast<std::size_t>(horizon_kicks));
    s.gaps_.reserve(static_cast<std::size_t>(horizon_kicks));

    if (const auto* p = std::get_if<PeriodicMode>(&mode)) {
        if (!valid_period(p->period))
            throw InvalidArgument("periodic schedule needs a positive finite period");
        s.period1_ = p->period;
        for (std::int64_t n = 1; n <= horizon_kicks; ++n) {
            s.events_.push_back({n, 0});
            s.gaps_.push_back(p->period);
        }
        return s;
    }

    const auto& q = std::get<QuasiperiodicMode>(mode);
    const double t1 = q.period1;
    const double t2 = q.period2.evaluate();
    if (!valid_period(t1) || !valid_period(t2))
        throw InvalidArgument("quasiperiodic schedule needs positive finite periods");
    if (auto r = rational_approximation(t2 / t1, kMaxCommensurateDenominator); r.q != 0) {
        std::ostringstream os;
        os << "commensurate periods: T2/T1 = " << r.p << "/" << r.q;
        throw InvalidArgument(os.str());
    }
    s.period1_ = t1;
    s.period2_ = t2;

    // Merge the combs {n T1} and {m T2}, n, m >= 1.
    std::int64_t n = 1, m = 1;
    double prev = 0.0;
    while (static_cast<std::int64_t>(s.events_.size()) < horizon_kicks) {
        const double a = static_cast<double>(n) * t1;
        const double b = static_cast<double>(m) * t2;
        double t;
        if (a < b) {
            s.events_.push_back({n++, 0});
            t = a;
        } else if (b < a) {
            s.events_.push_back({0, m++});
            t = b;
        } else {
            throw InvalidArgument("kick combs coincide at t = " + std::to_string(a));
        }
        if (!(t > prev))
            throw InvalidArgument("kick times are not strictly increasing");
        s.gaps_.push_back(t - prev);
        prev = t;
    }
    return s;
}

std::vector<double> gaps(const KickSchedule& schedule)
{
    if (schedule.size() == 0)
        throw InvalidArgument("gaps of an empty schedule");
    auto g = schedule.gaps();
    return {g.begin(), g.end()};
}

std::string describe(const ScheduleMode& mode)
{
    std::ostringstream os;
    os.precision(17);
    if (const auto* p = std::get_if<PeriodicMode>(&mode)) {
        os << "periodic(T=" << p->period << ")";
    } else {
        const auto& q = std::get<QuasiperiodicMode>(mode);
        os << "quasiperiodic(T1=" << q.period1 << ", T2=";
        if (q.period2.kind == PeriodSpec::Kind::golden_ratio)
            os << "golden";
        else
            os << q.period2.value;
        os << ")";
    }
    return os.str();
}

} // namespace qkr

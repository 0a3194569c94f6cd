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

#include "qkr/io.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace qkr;

#ifndef QKR_GOLDEN_DIR
#define QKR_GOLDEN_DIR "tests/golden"
#endif

namespace {

std::string key_path_of(const std::string& text)
{
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.key_path();
    }
    return "<accepted>";
}

ObservableSeries one_sample(bool with_fidelity)
{
    ObservableSeries s;
    s.kick = {10};
    s.time = {8.0901699437494745};
    s.n2 = {1234.5678901234567};
    s.entropy = {3.3333333333333335};
    s.participation = {17.25};
    s.lmax = {321};
    s.norm_error = {2.2204460492503131e-16};
    if (with_fidelity)
        s.fidelity = std::vector<double>{0.1};
    return s;
}

} // namespace

TEST_CASE("minimal config echoes every default")
{
    const auto c = parse_config(R"({"schedule": "quasiperiodic"})");
    CHECK(c.plan == ExperimentPlan{});
    CHECK(c.plan.kick_strength == 5.0);
    CHECK(c.plan.hbar == 1.0);
    CHECK(c.plan.t_star == 10000);
    CHECK(c.plan.epsilon == 3e-3);
    const auto& q = std::get<QuasiperiodicMode>(c.plan.schedule);
    CHECK(q.period2.kind == PeriodSpec::Kind::golden_ratio);
    CHECK(to_json_text(c) == read_text_file(QKR_GOLDEN_DIR "/minimal_config_echo.json"));
}

TEST_CASE("schema and range errors carry the key path")
{
    CHECK(key_path_of(R"({"epsilon": -1})") == "epsilon");
    CHECK(key_path_of(R"({"t_star": 10001})") == "t_star");
    CHECK(key_path_of(R"({"t_star": 10000})") == "<accepted>");
    CHECK(key_path_of(R"({"K": "five"})") == "K");
    CHECK(key_path_of(R"({"L": 1.5})") == "L");
    CHECK(key_path_of(R"({"kappa": 1})") == "kappa");
    CHECK(key_path_of(R"({"tolerances": {"norm": 0}})") == "tolerances.norm");
    CHECK(key_path_of(R"({"tolerances": {"nrm": 1e-9}})") == "tolerances.nrm");
    CHECK(key_path_of(R"({"schedule": {"mode": "quasiperiodic", "T2": "silver"}})") == "schedule.T2");
    CHECK(key_path_of(R"({"schedule": "chaotic"})") == "schedule");
    CHECK(key_path_of(R"({"initial": {"type": "gaussian", "sigma": -2}})") == "initial.sigma");
    CHECK(key_path_of(R"({"propagator": "fft"})") == "propagator");
    CHECK(key_path_of(R"({"delta": 1})") == "delta");
    CHECK(key_path_of(R"({"scan": {"eps_grid": [0.1, 0.01]}})") == "scan.eps_grid");
    CHECK(key_path_of(R"({"scan": {"eps_grid": [0.1, "x"]}})") == "scan.eps_grid[1]");
    CHECK(key_path_of(R"({"detector": {"window": 0}})") == "detector.window");
    CHECK(key_path_of("[1, 2]") == "");
    CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
    // Commensurate periods and misfit packets surface as config errors too.
    CHECK_THROWS_AS(parse_config(R"({"schedule": {"mode": "quasiperiodic", "T2": 1.5}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"L": 8, "initial": {"type": "gaussian", "sigma": 3}})"), ConfigError);
}

TEST_CASE("round trip parse(emit(config)) == config for random valid configs")
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 300; ++t) {
        RunConfig c;
        ExperimentPlan& p = c.plan;
        if (u(rng) < 0.5)
            p.schedule = PeriodicMode{0.1 + 3.0 * u(rng)};
        else if (u(rng) < 0.5)
            p.schedule = QuasiperiodicMode{1.0, PeriodSpec::golden()};
        else {
            double t2 = std::sqrt(2.0) + u(rng) * 1e-3;
            // Some random doubles sit within rounding of a small-denominator
            // rational and are rejected as commensurate.
            while (rational_approximation(t2, 1'000'000).q != 0)
                t2 = std::sqrt(2.0) + u(rng) * 1e-3;
            p.schedule = QuasiperiodicMode{1.0, PeriodSpec::of(t2)};
        }
        p.kick_strength = 10.0 * u(rng);
        p.hbar = 0.01 + u(rng);
        p.half_width = 64 + static_cast<int>(4000 * u(rng));
        if (u(rng) < 0.5)
            p.initial = MomentumEigenstate{static_cast<int>(20 * u(rng)) - 10};
        else
            p.initial = GaussianPacket{static_cast<int>(10 * u(rng)) - 5, 0.5 + 5.0 * u(rng)};
        p.t_star = 1 + static_cast<long>(1000 * u(rng));
        p.total_kicks = 2 * p.t_star + static_cast<long>(100 * u(rng));
        p.epsilon = u(rng) * 1e-2;
        p.record_every = 1 + static_cast<long>(20 * u(rng));
        p.delta = std::pow(10.0, -12.0 * u(rng) - 0.5);
        p.engine.kind = u(rng) < 0.5 ? PropagatorKind::bessel : PropagatorKind::spectral;
        p.engine.grid_size = u(rng) < 0.5 ? 0 : 2 * p.half_width + 1 + static_cast<int>(100 * u(rng));
        p.engine.band_tolerance = std::pow(10.0, -16.0 * u(rng) - 1.0);
        p.engine.edge_budget = std::pow(10.0, -14.0 * u(rng) - 1.0);
        p.norm_tolerance = std::pow(10.0, -14.0 * u(rng) - 1.0);
        p.detector = {u(rng), 1 + static_cast<int>(9 * u(rng))};
        c.scan.eps_grid = {u(rng) * 1e-4 + 1e-9, 1e-3 + u(rng) * 1e-3, 0.1 / 3.0};
        c.scan.refine = static_cast<int>(10 * u(rng));
        c.scan.t_star_grid = {1 + static_cast<long>(10 * u(rng)), 50, 700};
        c.scan.workers = static_cast<int>(8 * u(rng));
        const auto text = to_json_text(c);
        INFO(text);
        REQUIRE(parse_config(text) == c);
        CHECK(to_json_text(parse_config(text)) == text);
        CHECK(parse_plan(to_json_text(p)) == p);
    }
}

TEST_CASE("empty series emits only the header")
{
    std::ostringstream os;
    emit_series(ObservableSeries{}, os);
    CHECK(os.str() == "kick,time,n2,entropy,pr,lmax,norm_err,fidelity\n");
    std::istringstream in(os.str());
    CHECK(read_series(in).empty());
}

TEST_CASE("single sample: two lines, full precision, exact round trip")
{
    for (const bool fid : {false, true}) {
        const auto s = one_sample(fid);
        std::ostringstream os;
        emit_series(s, os);
        const std::string text = os.str();
        CHECK(std::count(text.begin(), text.end(), '\n') == 2);
        if (fid)
            CHECK(text.find(",0.10000000000000001\n") != std::string::npos);
        else
            CHECK(text.substr(text.size() - 2) == ",\n");
        std::istringstream in(text);
        CHECK(read_series(in) == s);
    }
}

TEST_CASE("malformed series files are rejected")
{
    std::istringstream bad_header("kick,time\n1,2\n");
    CHECK_THROWS_AS(read_series(bad_header), Error);
    std::istringstream bad_cell("kick,time,n2,entropy,pr,lmax,norm_err,fidelity\n1,2,x,4,5,6,7,\n");
    CHECK_THROWS_AS(read_series(bad_cell), Error);
    std::istringstream partial("kick,time,n2,entropy,pr,lmax,norm_err,fidelity\n"
                               "1,2,3,4,5,6,7,0.5\n2,2,3,4,5,6,7,\n");
    CHECK_THROWS_AS(read_series(partial), Error);
}

TEST_CASE("a reversal run survives the CSV round trip with its resume kick")
{
    ExperimentPlan p;
    p.half_width = 1024;
    p.t_star = 300;
    p.total_kicks = 600;
    p.record_every = 5;
    p.epsilon = 0.05;
    const auto r = run_reversal(p);
    REQUIRE(r.resume_kick.has_value());
    std::ostringstream a, b;
    emit_series(r.series, a);
    emit_series(*r.baseline, b);
    std::istringstream ia(a.str()), ib(b.str());
    auto s = read_series(ia);
    auto base = read_series(ib);
    s.break_kick = p.t_star;
    base.break_kick = p.t_star;
    CHECK(s.n2 == r.series.n2);
    CHECK(*s.fidelity == *r.series.fidelity);
    CHECK(detect_resume(s, base, p.detector) == r.resume_kick);
}

TEST_CASE("manifest records digest, engine and outcome")
{
    RunConfig c;
    c.plan.total_kicks = 100;
    c.plan.t_star = 50;
    auto m = make_manifest(c, "forward");
    CHECK(m.schedule_digest.size() == 16);
    CHECK(m.schedule_digest == schedule_digest(c.plan));
    CHECK(m.artifact_version == artifact_version());
    m.results_json = R"({"answer": 42})";
    const auto text = to_json_text(m);
    CHECK(text.find("\"status\": \"completed\"") != std::string::npos);
    CHECK(text.find("\"grid_size\": 16875") != std::string::npos);
    CHECK(text.find("\"answer\": 42") != std::string::npos);
    CHECK(text.find(m.schedule_digest) != std::string::npos);
    m.outcome = {false, "numerical", "edge leakage"};
    CHECK(to_json_text(m).find("\"status\": \"aborted\"") != std::string::npos);

    RunConfig other = c;
    other.plan.schedule = PeriodicMode{1.0};
    CHECK(schedule_digest(other.plan) != m.schedule_digest);
}

TEST_CASE("plot script references every file")
{
    const auto s = plot_script({"a.csv", "b.csv"}, true);
    CHECK(s.find("'a.csv' using 1:3") != std::string::npos);
    CHECK(s.find("'b.csv' using 1:8") != std::string::npos);
    CHECK(plot_script({"a.csv"}, false).find("1:8") == std::string::npos);
}

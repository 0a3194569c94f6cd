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

#include "qkr/bessel.hpp"

#include <json.hpp>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#ifndef QKR_VERSION
#define QKR_VERSION "0.0.0"
#endif

namespace qkr {

using json = nlohmann::ordered_json;

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Typed access to one JSON object with unknown-key detection.
class Section {
public:
    Section(const json& node, std::string path) : node_(node), path_(std::move(path))
    {
        if (!node_.is_object())
            throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return node_.contains(key); }

    const json& raw(const std::string& key)
    {
        seen_.insert(key);
        return node_.at(key);
    }

    double real(const std::string& key, double fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = raw(key);
        if (!v.is_number())
            throw ConfigError(join(path_, key), "expected a number");
        return v.get<double>();
    }

    long integer(const std::string& key, long fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = raw(key);
        if (!v.is_number_integer())
            throw ConfigError(join(path_, key), "expected an integer");
        return v.get<long>();
    }

    std::string text(const std::string& key, const std::string& fallback)
    {
        if (!has(key))
            return fallback;
        const json& v = raw(key);
        if (!v.is_string())
            throw ConfigError(join(path_, key), "expected a string");
        return v.get<std::string>();
    }

    std::string path(const std::string& key) const { return join(path_, key); }

    void finish() const
    {
        for (auto it = node_.begin(); it != node_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(join(path_, it.key()), "unknown key");
    }

private:
    const json& node_;
    std::string path_;
    std::set<std::string> seen_;
};

void check(bool ok, const std::string& path, const std::string& what)
{
    if (!ok)
        throw ConfigError(path, what);
}

ScheduleMode parse_schedule(const json& v, const std::string& path)
{
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        if (name == "periodic")
            return PeriodicMode{};
        if (name == "quasiperiodic")
            return QuasiperiodicMode{};
        throw ConfigError(path, "expected \"periodic\" or \"quasiperiodic\", got \"" + name + "\"");
    }
    Section s(v, path);
    const auto mode = s.text("mode", "");
    if (mode == "periodic") {
        PeriodicMode m;
        m.period = s.real("T", m.period);
        check(m.period > 0.0 && std::isfinite(m.period), s.path("T"), "period must be positive");
        s.finish();
        return m;
    }
    if (mode == "quasiperiodic") {
        QuasiperiodicMode m;
        m.period1 = s.real("T1", m.period1);
        check(m.period1 > 0.0 && std::isfinite(m.period1), s.path("T1"), "period must be positive");
        if (s.has("T2")) {
            const json& t2 = s.raw("T2");
            if (t2.is_string()) {
                check(t2.get<std::string>() == "golden", s.path("T2"),
                      "expected a number or \"golden\"");
                m.period2 = PeriodSpec::golden();
            } else if (t2.is_number()) {
                m.period2 = PeriodSpec::of(t2.get<double>());
                check(m.period2.value > 0.0 && std::isfinite(m.period2.value), s.path("T2"),
                      "period must be positive");
            } else {
                throw ConfigError(s.path("T2"), "expected a number or \"golden\"");
            }
        }
        s.finish();
        return m;
    }
    throw ConfigError(s.path("mode"), "expected \"periodic\" or \"quasiperiodic\"");
}

InitialStateSpec parse_initial(const json& v, const std::string& path)
{
    Section s(v, path);
    const auto type = s.text("type", "eigenstate");
    if (type == "eigenstate") {
        MomentumEigenstate m;
        m.l0 = static_cast<int>(s.integer("l0", m.l0));
        s.finish();
        return m;
    }
    if (type == "gaussian") {
        GaussianPacket g;
        g.l0 = static_cast<int>(s.integer("l0", g.l0));
        g.sigma = s.real("sigma", g.sigma);
        check(g.sigma > 0.0, s.path("sigma"), "sigma must be positive");
        s.finish();
        return g;
    }
    throw ConfigError(s.path("type"), "expected \"eigenstate\" or \"gaussian\"");
}

std::vector<double> real_list(const json& v, const std::string& path)
{
    check(v.is_array() && !v.empty(), path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        check(v[i].is_number(), path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<long> integer_list(const json& v, const std::string& path)
{
    check(v.is_array() && !v.empty(), path, "expected a non-empty array of integers");
    std::vector<long> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        check(v[i].is_number_integer(), path + "[" + std::to_string(i) + "]",
              "expected an integer");
        out.push_back(v[i].get<long>());
    }
    return out;
}

template <class T>
bool strictly_ascending(const std::vector<T>& v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i - 1] < v[i]))
            return false;
    return true;
}

json schedule_json(const ScheduleMode& mode)
{
    json j;
    if (const auto* p = std::get_if<PeriodicMode>(&mode)) {
        j["mode"] = "periodic";
        j["T"] = p->period;
    } else {
        const auto& q = std::get<QuasiperiodicMode>(mode);
        j["mode"] = "quasiperiodic";
        j["T1"] = q.period1;
        if (q.period2.kind == PeriodSpec::Kind::golden_ratio)
            j["T2"] = "golden";
        else
            j["T2"] = q.period2.value;
    }
    return j;
}

json initial_json(const InitialStateSpec& spec)
{
    json j;
    if (const auto* m = std::get_if<MomentumEigenstate>(&spec)) {
        j["type"] = "eigenstate";
        j["l0"] = m->l0;
    } else {
        const auto& g = std::get<GaussianPacket>(spec);
        j["type"] = "gaussian";
        j["l0"] = g.l0;
        j["sigma"] = g.sigma;
    }
    return j;
}

json plan_json(const ExperimentPlan& p)
{
    json j;
    j["schedule"] = schedule_json(p.schedule);
    j["K"] = p.kick_strength;
    j["hbar"] = p.hbar;
    j["initial"] = initial_json(p.initial);
    j["L"] = p.half_width;
    j["t_star"] = p.t_star;
    j["epsilon"] = p.epsilon;
    j["total_kicks"] = p.total_kicks;
    j["record_every"] = p.record_every;
    j["delta"] = p.delta;
    j["propagator"] = {{"kind", std::string(to_string(p.engine.kind))},
                       {"grid", p.engine.grid_size}};
    j["tolerances"] = {{"norm", p.norm_tolerance},
                       {"edge", p.engine.edge_budget},
                       {"band", p.engine.band_tolerance}};
    j["detector"] = {{"rho", p.detector.rho}, {"window", p.detector.window}};
    return j;
}

json config_json(const RunConfig& c)
{
    json j = plan_json(c.plan);
    j["scan"] = {{"eps_grid", c.scan.eps_grid},
                 {"refine", c.scan.refine},
                 {"t_star_grid", c.scan.t_star_grid},
                 {"workers", c.scan.workers}};
    return j;
}

std::string utc_timestamp()
{
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"))
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

RunConfig parse_config(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("malformed JSON: ") + e.what());
    }
    Section s(root, "");
    RunConfig c;
    ExperimentPlan& p = c.plan;

    if (s.has("schedule"))
        p.schedule = parse_schedule(s.raw("schedule"), "schedule");
    p.kick_strength = s.real("K", p.kick_strength);
    check(p.kick_strength >= 0.0 && std::isfinite(p.kick_strength), "K", "must be finite and >= 0");
    p.hbar = s.real("hbar", p.hbar);
    check(p.hbar > 0.0 && std::isfinite(p.hbar), "hbar", "must be positive");
    if (s.has("initial"))
        p.initial = parse_initial(s.raw("initial"), "initial");
    p.half_width = static_cast<int>(s.integer("L", p.half_width));
    check(p.half_width >= 1, "L", "must be >= 1");
    p.t_star = s.integer("t_star", p.t_star);
    check(p.t_star >= 1, "t_star", "must be >= 1");
    p.epsilon = s.real("epsilon", p.epsilon);
    check(p.epsilon >= 0.0 && std::isfinite(p.epsilon), "epsilon", "must be finite and >= 0");
    p.total_kicks = s.integer("total_kicks", p.total_kicks);
    check(p.total_kicks >= 0, "total_kicks", "must be >= 0");
    check(2 * p.t_star <= p.total_kicks, "t_star", "must not exceed total_kicks / 2");
    p.record_every = s.integer("record_every", p.record_every);
    check(p.record_every >= 1, "record_every", "must be >= 1");
    p.delta = s.real("delta", p.delta);
    check(p.delta > 0.0 && p.delta < 1.0, "delta", "must lie in (0, 1)");

    if (s.has("propagator")) {
        const json& v = s.raw("propagator");
        auto kind_of = [](const std::string& name, const std::string& path) {
            try {
                return propagator_kind_from_string(name);
            } catch (const Error&) {
                throw ConfigError(path, "expected \"spectral\" or \"bessel\"");
            }
        };
        if (v.is_string()) {
            p.engine.kind = kind_of(v.get<std::string>(), "propagator");
        } else {
            Section e(v, "propagator");
            p.engine.kind = kind_of(e.text("kind", "spectral"), e.path("kind"));
            p.engine.grid_size = static_cast<int>(e.integer("grid", p.engine.grid_size));
            check(p.engine.grid_size == 0 || p.engine.grid_size >= 2 * p.half_width + 1,
                  e.path("grid"), "must be 0 (automatic) or >= 2L + 1");
            e.finish();
        }
    }
    if (s.has("tolerances")) {
        Section t(s.raw("tolerances"), "tolerances");
        p.norm_tolerance = t.real("norm", p.norm_tolerance);
        check(p.norm_tolerance > 0.0, t.path("norm"), "must be positive");
        p.engine.edge_budget = t.real("edge", p.engine.edge_budget);
        check(p.engine.edge_budget > 0.0, t.path("edge"), "must be positive");
        p.engine.band_tolerance = t.real("band", p.engine.band_tolerance);
        check(p.engine.band_tolerance > 0.0, t.path("band"), "must be positive");
        t.finish();
    }
    if (s.has("detector")) {
        Section d(s.raw("detector"), "detector");
        p.detector.rho = d.real("rho", p.detector.rho);
        check(p.detector.rho > 0.0, d.path("rho"), "must be positive");
        p.detector.window = static_cast<int>(d.integer("window", p.detector.window));
        check(p.detector.window >= 1, d.path("window"), "must be >= 1");
        d.finish();
    }
    if (s.has("scan")) {
        Section g(s.raw("scan"), "scan");
        if (g.has("eps_grid")) {
            c.scan.eps_grid = real_list(g.raw("eps_grid"), g.path("eps_grid"));
            check(strictly_ascending(c.scan.eps_grid) && c.scan.eps_grid.front() > 0.0,
                  g.path("eps_grid"), "must be positive and strictly ascending");
        }
        c.scan.refine = static_cast<int>(g.integer("refine", c.scan.refine));
        check(c.scan.refine >= 0, g.path("refine"), "must be >= 0");
        if (g.has("t_star_grid")) {
            c.scan.t_star_grid = integer_list(g.raw("t_star_grid"), g.path("t_star_grid"));
            check(strictly_ascending(c.scan.t_star_grid) && c.scan.t_star_grid.front() >= 1,
                  g.path("t_star_grid"), "must be positive and strictly ascending");
        }
        c.scan.workers = static_cast<int>(g.integer("workers", c.scan.workers));
        check(c.scan.workers >= 0, g.path("workers"), "must be >= 0");
        g.finish();
    }
    s.finish();

    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError("", e.what());
    }
    return c;
}

ExperimentPlan parse_plan(const std::string& text)
{
    return parse_config(text).plan;
}

std::string to_json_text(const RunConfig& config)
{
    return config_json(config).dump(2) + "\n";
}

std::string to_json_text(const ExperimentPlan& plan)
{
    return plan_json(plan).dump(2) + "\n";
}

std::string config_schema_help()
{
    return R"(Config file: a JSON object. Every key is optional.
  schedule      "quasiperiodic" | "periodic" |
                {"mode": "periodic", "T": 1} |
                {"mode": "quasiperiodic", "T1": 1, "T2": "golden" | number}
  K             kick strength, >= 0                      (5)
  hbar          effective Planck constant, > 0           (1)
  initial       {"type": "eigenstate", "l0": 0} |
                {"type": "gaussian", "l0": 0, "sigma": 1}
  L             basis half width                         (8192)
  t_star        break kick                               (10000)
  epsilon       phase perturbation at the break          (0.003)
  total_kicks   forward kicks; >= 2 t_star               (20000)
  record_every  sampling stride in kicks                 (10)
  delta         presence threshold for lmax              (1e-8)
  propagator    "spectral" | "bessel" | {"kind": ..., "grid": 0}
  tolerances    {"norm": 1e-10, "edge": 1e-10, "band": 1e-30}
  detector      {"rho": 0.1, "window": 5}
  scan          {"eps_grid": [...], "refine": 0,
                 "t_star_grid": [5000, 10000, 20000], "workers": 0}
)";
}

std::string artifact_version()
{
    return QKR_VERSION;
}

std::string schedule_digest(const ExperimentPlan& plan)
{
    const auto sched = build_schedule(plan.schedule, std::max<long>(plan.total_kicks, 1));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(sched.digest()));
    return buf;
}

RunManifest make_manifest(const RunConfig& config, const std::string& command)
{
    RunManifest m;
    m.config = config;
    m.command = command;
    m.schedule_digest = schedule_digest(config.plan);
    m.artifact_version = artifact_version();
    m.timestamp = utc_timestamp();
    return m;
}

std::string to_json_text(const RunManifest& m)
{
    const ExperimentPlan& p = m.config.plan;
    json engine;
    engine["kind"] = std::string(to_string(p.engine.kind));
    if (p.engine.kind == PropagatorKind::spectral) {
        engine["grid_size"] =
            p.engine.grid_size > 0 ? p.engine.grid_size : default_grid_size(p.half_width);
    } else {
        engine["band_half_width"] =
            build_band(p.kick_strength / p.hbar, p.engine.band_tolerance).half_width();
    }
    engine["band_tolerance"] = p.engine.band_tolerance;
    engine["edge_budget"] = p.engine.edge_budget;
    engine["norm_tolerance"] = p.norm_tolerance;

    json j;
    j["artifact_version"] = m.artifact_version;
    j["timestamp"] = m.timestamp;
    j["command"] = m.command;
    j["schedule"] = describe(p.schedule);
    j["schedule_digest"] = m.schedule_digest;
    j["engine"] = engine;
    j["config"] = config_json(m.config);
    if (m.outcome.completed)
        j["outcome"] = {{"status", "completed"}};
    else
        j["outcome"] = {{"status", "aborted"},
                        {"category", m.outcome.category},
                        {"reason", m.outcome.reason}};
    j["results"] = json::parse(m.results_json);
    return j.dump(2) + "\n";
}

void emit_series(const ObservableSeries& s, std::ostream& out)
{
    out << "kick,time,n2,entropy,pr,lmax,norm_err,fidelity\n";
    char buf[512];
    for (std::size_t i = 0; i < s.size(); ++i) {
        int n = std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%d,%.17g,", s.kick[i],
                              s.time[i], s.n2[i], s.entropy[i], s.participation[i], s.lmax[i],
                              s.norm_error[i]);
        if (s.fidelity)
            n += std::snprintf(buf + n, sizeof buf - static_cast<std::size_t>(n), "%.17g",
                               (*s.fidelity)[i]);
        out.write(buf, n);
        out.put('\n');
    }
}

void emit_series(const ObservableSeries& series, const std::string& path)
{
    std::ostringstream os;
    emit_series(series, os);
    write_text_file(path, os.str());
}

ObservableSeries read_series(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != "kick,time,n2,entropy,pr,lmax,norm_err,fidelity")
        throw Error(ErrorCategory::config, "series CSV: missing or unexpected header");
    ObservableSeries s;
    std::size_t row = 1, with_fid = 0;
    while (std::getline(in, line)) {
        ++row;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            cells.push_back(cell);
        if (!line.empty() && line.back() == ',')
            cells.emplace_back();
        if (cells.size() != 8)
            throw Error(ErrorCategory::config,
                        "series CSV row " + std::to_string(row) + ": expected 8 cells");
        auto real = [&](const std::string& c) {
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(c.c_str(), &end);
            if (c.empty() || *end != '\0' || errno == ERANGE)
                throw Error(ErrorCategory::config,
                            "series CSV row " + std::to_string(row) + ": bad number '" + c + "'");
            return v;
        };
        auto integer = [&](const std::string& c) {
            char* end = nullptr;
            const long v = std::strtol(c.c_str(), &end, 10);
            if (c.empty() || *end != '\0')
                throw Error(ErrorCategory::config,
                            "series CSV row " + std::to_string(row) + ": bad integer '" + c + "'");
            return v;
        };
        s.kick.push_back(integer(cells[0]));
        s.time.push_back(real(cells[1]));
        s.n2.push_back(real(cells[2]));
        s.entropy.push_back(real(cells[3]));
        s.participation.push_back(real(cells[4]));
        s.lmax.push_back(static_cast<int>(integer(cells[5])));
        s.norm_error.push_back(real(cells[6]));
        if (!cells[7].empty()) {
            if (!s.fidelity)
                s.fidelity.emplace();
            s.fidelity->push_back(real(cells[7]));
            ++with_fid;
        }
    }
    if (with_fid != 0 && with_fid != s.size())
        throw Error(ErrorCategory::config, "series CSV: fidelity column is partially filled");
    return s;
}

ObservableSeries read_series_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCategory::config, "cannot open " + path);
    return read_series(in);
}

std::string plot_script(const std::vector<std::string>& csv_files, bool with_fidelity)
{
    std::ostringstream os;
    os << "# gnuplot -p this_file\n"
          "set datafile separator ','\n"
          "set key autotitle columnhead\n"
          "set xlabel 'kick'\n";
    if (with_fidelity)
        os << "set multiplot layout 2,1\n";
    os << "set ylabel '<n^2>'\nplot ";
    for (std::size_t i = 0; i < csv_files.size(); ++i)
        os << (i ? ", \\n     " : "") << "'" << csv_files[i] << "' using 1:3 with lines title '"
           << csv_files[i] << "'";
    os << "\n";
    if (with_fidelity) {
        os << "set ylabel 'fidelity'\nset yrange [0:1.05]\nplot ";
        for (std::size_t i = 0; i < csv_files.size(); ++i)
            os << (i ? ", \\n     " : "") << "'" << csv_files[i]
               << "' using 1:8 with lines title '" << csv_files[i] << "'";
        os << "\nunset multiplot\n";
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCategory::config, "cannot open " + path + " for writing");
    out << text;
    out.flush();
    if (!out)
        throw Error(ErrorCategory::config, "write failed: " + path);
}

std::string read_text_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCategory::config, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace qkr

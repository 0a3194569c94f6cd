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
#include "qkr/io.hpp"
#include "qkr/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace qkr;

namespace {

int exit_code(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::invalid_argument:
    case ErrorCategory::config: return 2;
    case ErrorCategory::numerical: return 3;
    case ErrorCategory::inconclusive: return 4;
    }
    return 1;
}

json optional_kick(const std::optional<long>& k)
{
    return k ? json(*k) : json(nullptr);
}

std::string fmt17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Context {
    RunConfig config;
    fs::path out;
    RunManifest manifest;

    void write(const std::string& name, const std::string& text) const
    {
        write_text_file((out / name).string(), text);
    }
    void series(const std::string& name, const ObservableSeries& s) const
    {
        emit_series(s, (out / name).string());
    }
    void finish(const json& results)
    {
        manifest.results_json = results.dump();
        write("manifest.json", to_json_text(manifest));
    }
};

void cmd_forward(Context& ctx)
{
    const auto s = run_forward(ctx.config.plan);
    ctx.series("forward.csv", s);
    ctx.write("plot.gp", plot_script({"forward.csv"}, false));
    json r;
    r["samples"] = s.size();
    if (!s.empty()) {
        r["final_n2"] = s.n2.back();
        r["final_lmax"] = s.lmax.back();
        r["max_norm_error"] = *std::max_element(s.norm_error.begin(), s.norm_error.end());
    }
    if (s.size() >= 5) {
        const auto g = check_linear_growth(s);
        r["growth"] = {{"slope", g.fit.slope}, {"r2", g.fit.r2}, {"diffusive", g.diffusive}};
    }
    if (s.size() >= 20) {
        const auto p = check_plateau(s);
        r["plateau"] = {{"ratio", p.ratio}, {"saturated", p.saturated}};
    }
    ctx.finish(r);
}

void cmd_reverse(Context& ctx)
{
    const auto r = run_reversal(ctx.config.plan);
    ctx.series("reversal.csv", r.series);
    if (r.baseline)
        ctx.series("baseline.csv", *r.baseline);
    ctx.write("plot.gp", plot_script(r.baseline ? std::vector<std::string>{"reversal.csv",
                                                                            "baseline.csv"}
                                                : std::vector<std::string>{"reversal.csv"},
                                     true));
    ctx.finish({{"t_star", ctx.config.plan.t_star},
                {"epsilon", ctx.config.plan.epsilon},
                {"resume_kick", optional_kick(r.resume_kick)},
                {"final_fidelity", r.final_fidelity},
                {"lmax_at_break", r.lmax_at_break},
                {"eps_th_at_break", r.eps_th_at_break}});
}

void cmd_scan_eps(Context& ctx)
{
    const auto& sc = ctx.config.scan;
    const auto rep = threshold_scan(ctx.config.plan, sc.eps_grid, sc.refine, sc.workers);
    std::ostringstream csv;
    csv << "epsilon,resume_kick,final_fidelity,qualifies\n";
    json pts = json::array();
    for (const auto& p : rep.points) {
        csv << fmt17(p.epsilon) << ',' << (p.resume_kick ? std::to_string(*p.resume_kick) : "")
            << ',' << fmt17(p.final_fidelity) << ',' << (p.qualifies ? 1 : 0) << '\n';
    }
    ctx.write("scan_eps.csv", csv.str());
    json deltas = json::array();
    for (const double d : {1e-6, 1e-8, 1e-10}) {
        const int m = lmax(rep.break_state, d);
        deltas.push_back({{"delta", d}, {"lmax", m}, {"ratio", rep.eps_th_empirical * m}});
    }
    ctx.finish({{"eps_th_empirical", rep.eps_th_empirical},
                {"eps_th_estimate", rep.eps_th_lmax},
                {"ratio", rep.ratio},
                {"lmax_at_break", rep.lmax_at_break},
                {"delta_robustness", deltas}});
}

void cmd_scan_tstar(Context& ctx)
{
    const auto pts = tstar_scan(ctx.config.plan, ctx.config.scan.t_star_grid, ctx.config.scan.workers);
    std::ostringstream csv;
    csv << "t_star,resume_kick,delay,final_fidelity,eps_th_at_break\n";
    std::vector<std::string> files;
    for (const auto& p : pts) {
        const std::string name = "reversal_t" + std::to_string(p.t_star) + ".csv";
        ctx.series(name, p.series);
        ctx.series("baseline_t" + std::to_string(p.t_star) + ".csv", p.baseline);
        files.push_back(name);
        csv << p.t_star << ',' << (p.resume_kick ? std::to_string(*p.resume_kick) : "") << ','
            << (p.delay ? std::to_string(*p.delay) : "") << ',' << fmt17(p.final_fidelity) << ','
            << fmt17(p.eps_th_at_break) << '\n';
    }
    ctx.write("scan_tstar.csv", csv.str());
    ctx.write("plot.gp", plot_script(files, true));
    json r = json::array();
    for (const auto& p : pts)
        r.push_back({{"t_star", p.t_star},
                     {"resume_kick", optional_kick(p.resume_kick)},
                     {"delay", optional_kick(p.delay)},
                     {"final_fidelity", p.final_fidelity}});
    ctx.finish({{"epsilon", ctx.config.plan.epsilon}, {"points", r}});
}

void cmd_localize(Context& ctx)
{
    const auto rep = localization_freeze(ctx.config.plan, ctx.config.scan.t_star_grid);
    ctx.series("forward.csv", rep.forward);
    ctx.write("plot.gp", plot_script({"forward.csv"}, false));
    std::ostringstream csv;
    csv << "t_star,lmax,eps_th,after_localization\n";
    for (const auto& p : rep.points)
        csv << p.t_star << ',' << p.lmax << ',' << fmt17(p.eps_th) << ','
            << (p.after_localization ? 1 : 0) << '\n';
    ctx.write("freeze.csv", csv.str());
    ctx.finish({{"localization_time", rep.localization_time},
                {"decreasing_before", rep.decreasing_before},
                {"spread_after", rep.spread_after},
                {"frozen_after", rep.frozen_after},
                {"probe_t_star", rep.probe_t_star},
                {"probe_epsilon", rep.probe_epsilon},
                {"probe_final_fidelity", rep.probe_final_fidelity},
                {"probe_reversible", rep.probe_reversible}});
}

int cmd_validate(int L)
{
    const auto rep = run_validation(L);
    std::printf("L = %d, dense tolerance %.0e (max abs), spectral tolerance %.0e (L2)\n",
                rep.half_width, rep.dense_tolerance, rep.spectral_tolerance);
    std::printf("%8s  %14s  %14s\n", "K/hbar", "dense-bessel", "bessel-spectral");
    for (const auto& c : rep.cases)
        std::printf("%8.3g  %14.3e  %14.3e\n", c.kick_argument, c.dense_vs_bessel,
                    c.bessel_vs_spectral);
    std::printf("%s\n", rep.ok ? "validation passed" : "validation FAILED");
    return rep.ok ? 0 : 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quantum kicked rotor: forward runs, time reversal and irreversibility thresholds"};
    app.require_subcommand(1);
    app.footer("\n" + config_schema_help() +
               "\nExit codes: 0 ok, 2 config/usage error, 3 numerical abort, 4 inconclusive scan.");

    std::string config_path;
    std::string out_dir = "out";
    int validate_l = 32;

    struct Cmd {
        const char* name;
        const char* help;
        void (*run)(Context&);
    };
    const Cmd cmds[] = {
        {"forward", "forward run, observables every record_every kicks", cmd_forward},
        {"reverse", "forward to t_star, perturb by epsilon, reverse back to t = 0", cmd_reverse},
        {"scan-eps", "empirical irreversibility threshold over scan.eps_grid", cmd_scan_eps},
        {"scan-tstar", "break-to-resume delay over scan.t_star_grid at fixed epsilon",
         cmd_scan_tstar},
        {"localize", "periodic rotor: localization time and threshold freeze over scan.t_star_grid",
         cmd_localize},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        sub->add_option("-c,--config", config_path, "JSON config file")->required();
        sub->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
        subs.push_back(sub);
    }
    auto* val = app.add_subcommand("validate", "dense-oracle and cross-propagator checks");
    val->add_option("-L,--half-width", validate_l, "basis half width")
        ->capture_default_str()
        ->check(CLI::Range(1, 256));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << app.help() << "\n";
        app.exit(e);
        return 2;
    }

    if (val->parsed())
        return cmd_validate(validate_l);

    std::size_t which = 0;
    while (!subs[which]->parsed())
        ++which;

    Context ctx;
    try {
        ctx.config = parse_config(read_text_file(config_path));
        ctx.out = out_dir;
        fs::create_directories(ctx.out);
        ctx.manifest = make_manifest(ctx.config, cmds[which].name);
        cmds[which].run(ctx);
        return 0;
    } catch (const Error& e) {
        std::cerr << "error category=" << category_name(e.category()) << " message=" << e.what()
                  << "\n";
        if (e.category() == ErrorCategory::config)
            std::cerr << "\n" << config_schema_help();
        if (!ctx.manifest.command.empty()) {
            if (const auto* aborted = dynamic_cast<const RunAborted*>(&e))
                ctx.series("partial.csv", aborted->partial());
            ctx.manifest.outcome = {false, category_name(e.category()), e.what()};
            ctx.finish(json::object());
        }
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error category=config message=" << e.what() << "\n";
        return 2;
    }
}

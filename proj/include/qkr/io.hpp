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

#include "qkr/experiments.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qkr {

// Settings that only the scan subcommands read.
struct ScanSettings {
    std::vector<double> eps_grid{1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2};
    int refine = 0;
    std::vector<long> t_star_grid{5000, 10000, 20000};
    int workers = 0; // 0 selects the hardware concurrency
    bool operator==(const ScanSettings&) const = default;
};

struct RunConfig {
    ExperimentPlan plan;
    ScanSettings scan;
    bool operator==(const RunConfig&) const = default;
};

// JSON config text. Omitted keys take the defaults of ExperimentPlan and
// ScanSettings. Unknown keys, wrong types and out-of-range values throw
// ConfigError naming the key path.
RunConfig parse_config(const std::string& text);
ExperimentPlan parse_plan(const std::string& text);

// Every key written out explicitly; parse_config(to_json_text(c)) == c.
std::string to_json_text(const RunConfig& config);
std::string to_json_text(const ExperimentPlan& plan);

// Human-readable schema summary for usage errors.
std::string config_schema_help();

std::string artifact_version();

struct RunOutcome {
    bool completed = true;
    std::string category; // error category name when aborted
    std::string reason;
};

struct RunManifest {
    RunConfig config;
    std::string command;
    std::string schedule_digest; // 16 hex digits
    std::string artifact_version;
    std::string timestamp;       // UTC, ISO 8601
    RunOutcome outcome;
    std::string results_json = "{}"; // command-specific summary
};

// Digest of the kick times a run with this plan evaluates.
std::string schedule_digest(const ExperimentPlan& plan);

RunManifest make_manifest(const RunConfig& config, const std::string& command);
std::string to_json_text(const RunManifest& manifest);

// CSV, header kick,time,n2,entropy,pr,lmax,norm_err,fidelity; reals with 17
// significant digits. The fidelity cell is empty when the series has none.
void emit_series(const ObservableSeries& series, std::ostream& out);
void emit_series(const ObservableSeries& series, const std::string& path);

ObservableSeries read_series(std::istream& in);
ObservableSeries read_series_file(const std::string& path);

// gnuplot script plotting n2 (and fidelity, when present) from the given CSVs.
std::string plot_script(const std::vector<std::string>& csv_files, bool with_fidelity);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

} // namespace qkr

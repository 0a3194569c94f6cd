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

#include <stdexcept>
#include <string>
#include <utility>

namespace qkr {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorCategory {
    invalid_argument = 1,
    config = 2,
    numerical = 3,
    inconclusive = 4,
};

inline const char* category_name(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::config: return "config";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::inconclusive: return "inconclusive";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

// Precondition violated by a caller (bad L, negative hbar, mismatched bases...).
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what)
        : Error(ErrorCategory::invalid_argument, what) {}
};

// Malformed or out-of-range configuration. `key_path` locates the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string key_path, const std::string& what)
        : Error(ErrorCategory::config, key_path.empty() ? what : key_path + ": " + what),
          key_path_(std::move(key_path)) {}

    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

// Probability reached the basis edge. The run cannot continue on this basis.
class LeakageError : public Error {
public:
    LeakageError(const std::string& what, double edge_mass, long kick)
        : Error(ErrorCategory::numerical, what), edge_mass_(edge_mass), kick_(kick) {}

    double edge_mass() const noexcept { return edge_mass_; }
    long kick() const noexcept { return kick_; }

private:
    double edge_mass_;
    long kick_;
};

class InconclusiveScan : public Error {
public:
    enum class Side { lower, upper };

    InconclusiveScan(Side side, const std::string& what)
        : Error(ErrorCategory::inconclusive, what), side_(side) {}

    Side side() const noexcept { return side_; }

private:
    Side side_;
};

} // namespace qkr

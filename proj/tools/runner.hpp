// runner.hpp: scenario execution shared by the dipid binary and its tests.

#pragma once

#include "io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dipid::app {

inline constexpr const char* kToolVersion = "dipid 1.0.0";

inline const std::vector<std::string>& task_names() {
    static const std::vector<std::string> names = {"simulate",    "sensitivity", "synthesize",   "verify-lemma",
                                                    "identify",    "noise-study", "certify-alpha"};
    return names;
}

struct Scenario {
    std::string task;
    std::filesystem::path system;
    std::optional<std::filesystem::path> dipole;
    std::filesystem::path output_dir = ".";
    Json params = Json::object();
};

// {"task": ..., "system": path, "dipole": path?, "output_dir": path, "params": {...}}.
// Relative paths, including file-valued params, resolve against the scenario's directory.
Scenario parse_scenario(const Json& doc, const std::filesystem::path& base, const std::string& where = "scenario");
Scenario load_scenario(const std::filesystem::path& path);

// Runs the task, writes its artifacts plus manifest.json into output_dir and a
// one-line JSON summary to out. On failure writes {"error": {...}} to err and
// error.json, and returns nonzero.
int run(const Scenario& scenario, std::ostream& out, std::ostream& err);

// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

}  // namespace dipid::app

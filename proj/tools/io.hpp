// io.hpp: JSON/CSV file formats used by the command-line tool.
//
// System file:  {"energies": [...], "dipole": [[...]], "initial": 1, "measured": 3}
//               (levels 1-based; "dipole" may instead live in a separate file)
// Dipole file:  {"dipole": [[...]]} or a bare matrix
// Control file: {"horizon": T, "segments": [
//                   {"type": "sampled", "start": s, "dt": h, "amplitudes": [...]},
//                   {"type": "resonant", "start": s, "duration": d, "amplitude": a, "frequency": w}]}
// Times and frequencies in controls are in normalized units.

#pragma once

#include "dipid/control.hpp"
#include "dipid/identify.hpp"
#include "dipid/qsys.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dipid::app {

using Json = nlohmann::json;

struct LoadedSystem {
    SystemSpec spec;
    DipoleMatrix dipole;
};

std::string read_file(const std::filesystem::path& path);
Json load_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const Json& doc);

LoadedSystem parse_system(const Json& system, const Json* dipole_doc, const std::string& where = "system");
LoadedSystem load_system(const std::filesystem::path& system, const std::optional<std::filesystem::path>& dipole);

RMatrix parse_matrix(const Json& doc, const std::string& where);
Json matrix_to_json(const RMatrix& m);

ControlWaveform parse_control(const Json& doc, const std::string& where = "control");
Json control_to_json(const ControlWaveform& control);
ControlWaveform load_control(const std::filesystem::path& path);

// {"records": [{"control": 0, "value": v, "variance": s, "seed": n}, ...]}
std::vector<MeasurementRecord> parse_records(const Json& doc, const std::string& where = "records");
Json records_to_json(const std::vector<MeasurementRecord>& records);

// "l-k" (1-based) or [l, k] to a 0-based pair.
LevelPair parse_pair(const Json& doc, const std::string& where);

// %.17g, enough to round-trip a double.
std::string format_double(double v);

}  // namespace dipid::app

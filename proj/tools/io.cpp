#include "io.hpp"

#include "dipid/error.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace dipid::app {

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
    throw ValidationError("schema: " + where + ": " + what);
}

const Json& require(const Json& doc, const char* key, const std::string& where) {
    if (!doc.is_object()) schema_error(where, "expected an object");
    const auto it = doc.find(key);
    if (it == doc.end()) schema_error(where, std::string("missing field '") + key + "'");
    return *it;
}

double number(const Json& v, const std::string& where) {
    if (!v.is_number()) schema_error(where, "expected a number");
    return v.get<double>();
}

int level_index(const Json& v, int n, const std::string& where) {
    if (!v.is_number_integer()) schema_error(where, "expected an integer level (1-based)");
    const int k = v.get<int>();
    if (k < 1 || k > n) schema_error(where, "level " + std::to_string(k) + " outside 1.." + std::to_string(n));
    return k - 1;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json load_json(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        schema_error(path.string(), std::string("not valid JSON (") + e.what() + ")");
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

void write_json(const std::filesystem::path& path, const Json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

RMatrix parse_matrix(const Json& doc, const std::string& where) {
    if (!doc.is_array() || doc.empty()) schema_error(where, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(doc.size());
    RMatrix m;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = doc[static_cast<std::size_t>(r)];
        if (!row.is_array()) schema_error(where, "row " + std::to_string(r + 1) + " is not an array");
        if (r == 0) m.resize(rows, static_cast<Eigen::Index>(row.size()));
        if (static_cast<Eigen::Index>(row.size()) != m.cols()) schema_error(where, "rows have different lengths");
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            m(r, c) = number(row[static_cast<std::size_t>(c)], where + "[" + std::to_string(r + 1) + "][" +
                                                                   std::to_string(c + 1) + "]");
        }
    }
    return m;
}

Json matrix_to_json(const RMatrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

LoadedSystem parse_system(const Json& system, const Json* dipole_doc, const std::string& where) {
    const auto& e = require(system, "energies", where);
    if (!e.is_array()) schema_error(where, "'energies' must be an array");
    std::vector<double> energies;
    for (const auto& v : e) energies.push_back(number(v, where + ".energies"));
    const int n = static_cast<int>(energies.size());
    const int initial = level_index(require(system, "initial", where), n, where + ".initial");
    const int measured = level_index(require(system, "measured", where), n, where + ".measured");

    const Json* mu = nullptr;
    std::string mu_where = where + ".dipole";
    if (dipole_doc) {
        mu = dipole_doc->is_object() ? &require(*dipole_doc, "dipole", "dipole") : dipole_doc;
        mu_where = "dipole";
    } else {
        mu = &require(system, "dipole", where);
    }
    const RMatrix raw = parse_matrix(*mu, mu_where);
    if (raw.rows() != n) schema_error(mu_where, "dipole is " + std::to_string(raw.rows()) + "x" +
                                                    std::to_string(raw.cols()) + " for " + std::to_string(n) + " levels");
    return {SystemSpec::create(std::move(energies), initial, measured), DipoleMatrix::from_matrix(raw)};
}

LoadedSystem load_system(const std::filesystem::path& system, const std::optional<std::filesystem::path>& dipole) {
    const Json sys = load_json(system);
    if (dipole) {
        const Json mu = load_json(*dipole);
        return parse_system(sys, &mu, system.string());
    }
    return parse_system(sys, nullptr, system.string());
}

ControlWaveform parse_control(const Json& doc, const std::string& where) {
    const double horizon = number(require(doc, "horizon", where), where + ".horizon");
    std::vector<Segment> segments;
    if (doc.contains("segments")) {
        const auto& segs = doc["segments"];
        if (!segs.is_array()) schema_error(where, "'segments' must be an array");
        for (std::size_t j = 0; j < segs.size(); ++j) {
            const std::string w = where + ".segments[" + std::to_string(j + 1) + "]";
            const auto& s = segs[j];
            const auto& type = require(s, "type", w);
            if (type == "sampled") {
                SampledSegment seg;
                seg.start = number(require(s, "start", w), w + ".start");
                seg.dt = number(require(s, "dt", w), w + ".dt");
                const auto& amps = require(s, "amplitudes", w);
                if (!amps.is_array()) schema_error(w, "'amplitudes' must be an array");
                for (const auto& a : amps) seg.amplitudes.push_back(number(a, w + ".amplitudes"));
                segments.emplace_back(std::move(seg));
            } else if (type == "resonant") {
                ResonantSegment seg;
                seg.start = number(require(s, "start", w), w + ".start");
                seg.duration = number(require(s, "duration", w), w + ".duration");
                seg.amplitude = number(require(s, "amplitude", w), w + ".amplitude");
                seg.frequency = number(require(s, "frequency", w), w + ".frequency");
                segments.emplace_back(seg);
            } else {
                schema_error(w, "unknown segment type (expected \"sampled\" or \"resonant\")");
            }
        }
    }
    return ControlWaveform(horizon, std::move(segments));
}

Json control_to_json(const ControlWaveform& control) {
    Json segs = Json::array();
    for (const auto& seg : control.segments()) {
        if (const auto* s = std::get_if<SampledSegment>(&seg)) {
            segs.push_back({{"type", "sampled"}, {"start", s->start}, {"dt", s->dt}, {"amplitudes", s->amplitudes}});
        } else {
            const auto& r = std::get<ResonantSegment>(seg);
            segs.push_back({{"type", "resonant"},
                            {"start", r.start},
                            {"duration", r.duration},
                            {"amplitude", r.amplitude},
                            {"frequency", r.frequency}});
        }
    }
    return {{"horizon", control.horizon()}, {"segments", std::move(segs)}};
}

ControlWaveform load_control(const std::filesystem::path& path) {
    return parse_control(load_json(path), path.string());
}

std::vector<MeasurementRecord> parse_records(const Json& doc, const std::string& where) {
    const auto& list = doc.is_object() ? require(doc, "records", where) : doc;
    if (!list.is_array()) schema_error(where, "expected an array of records");
    std::vector<MeasurementRecord> out;
    for (std::size_t j = 0; j < list.size(); ++j) {
        const std::string w = where + "[" + std::to_string(j + 1) + "]";
        const auto& r = list[j];
        MeasurementRecord rec;
        const auto& id = require(r, "control", w);
        if (!id.is_number_integer() || id.get<long>() < 0) schema_error(w, "'control' must be a non-negative index");
        rec.control_id = id.get<std::size_t>();
        rec.value = number(require(r, "value", w), w + ".value");
        if (r.contains("variance")) rec.variance = number(r["variance"], w + ".variance");
        if (r.contains("seed")) rec.seed = r["seed"].get<std::uint64_t>();
        out.push_back(rec);
    }
    return out;
}

Json records_to_json(const std::vector<MeasurementRecord>& records) {
    Json list = Json::array();
    for (const auto& r : records) {
        list.push_back({{"control", r.control_id}, {"value", r.value}, {"variance", r.variance}, {"seed", r.seed}});
    }
    return {{"records", std::move(list)}};
}

LevelPair parse_pair(const Json& doc, const std::string& where) {
    int l = 0;
    int k = 0;
    if (doc.is_string()) {
        const std::string s = doc.get<std::string>();
        if (std::sscanf(s.c_str(), "%d-%d", &l, &k) != 2) schema_error(where, "pair must look like \"1-2\"");
    } else if (doc.is_array() && doc.size() == 2 && doc[0].is_number_integer() && doc[1].is_number_integer()) {
        l = doc[0].get<int>();
        k = doc[1].get<int>();
    } else {
        schema_error(where, "pair must be \"l-k\" or [l, k]");
    }
    if (l < 1 || k < 1 || l == k) schema_error(where, "pair levels must be distinct and 1-based");
    return {l - 1, k - 1};
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace dipid::app

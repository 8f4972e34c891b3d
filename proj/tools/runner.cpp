#include "runner.hpp"

#include "dipid/averaging.hpp"
#include "dipid/error.hpp"
#include "dipid/identify.hpp"
#include "dipid/propagate.hpp"
#include "dipid/ramsey.hpp"
#include "dipid/sensitivity.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

namespace dipid::app {

namespace fs = std::filesystem;

namespace {

const char* const kFileParams[] = {"control", "records", "initial_dipole"};

[[noreturn]] void bad_param(const std::string& key, const std::string& what) {
    throw ValidationError("parameter '" + key + "' " + what);
}

double param_double(const Json& p, const std::string& key, double fallback, double lo, double hi, bool open_lo = false) {
    double v = fallback;
    if (p.contains(key)) {
        if (!p[key].is_number()) bad_param(key, "must be a number");
        v = p[key].get<double>();
    }
    if (!std::isfinite(v) || v > hi || v < lo || (open_lo && v == lo)) {
        std::ostringstream ss;
        ss << "must be in " << (open_lo ? "(" : "[") << lo << ", " << hi << "], got " << v;
        bad_param(key, ss.str());
    }
    return v;
}

long param_int(const Json& p, const std::string& key, long fallback, long lo, long hi) {
    long v = fallback;
    if (p.contains(key)) {
        if (!p[key].is_number_integer()) bad_param(key, "must be an integer");
        v = p[key].get<long>();
    }
    if (v < lo || v > hi) bad_param(key, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
}

std::vector<double> param_list(const Json& p, const std::string& key, std::vector<double> fallback, double lo,
                               double hi) {
    if (!p.contains(key)) return fallback;
    if (!p[key].is_array() || p[key].empty()) bad_param(key, "must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& v : p[key]) {
        if (!v.is_number()) bad_param(key, "must contain only numbers");
        const double x = v.get<double>();
        if (!(x > lo && x <= hi)) {
            std::ostringstream ss;
            ss << "entries must be in (" << lo << ", " << hi << "], got " << x;
            bad_param(key, ss.str());
        }
        out.push_back(x);
    }
    return out;
}

StepPolicy policy_from(const Json& p) {
    StepPolicy policy;
    if (p.contains("stepper")) {
        const auto s = p["stepper"];
        if (s == "magnus4") {
            policy.stepper = Stepper::Magnus4;
        } else if (s == "midpoint") {
            policy.stepper = Stepper::ExponentialMidpoint;
        } else {
            bad_param("stepper", "must be \"magnus4\" or \"midpoint\"");
        }
    }
    policy.points_per_period = param_double(p, "points_per_period", policy.points_per_period, 2.0, 1e6);
    policy.field_factor = param_double(p, "field_factor", policy.field_factor, 0.0, 10.0, true);
    if (p.contains("max_dt")) policy.max_dt = param_double(p, "max_dt", 1.0, 0.0, 1e6, true);
    return policy;
}

RamseyConfig ramsey_from(const Json& p, const StepPolicy& policy) {
    RamseyConfig cfg;
    cfg.steer.policy = policy;
    cfg.steer.seed = static_cast<std::uint64_t>(param_int(p, "steer_seed", 1, 0, 1L << 62));
    return cfg;
}

std::vector<LevelPair> pairs_from(const Json& p, const DipoleMatrix& dipole) {
    if (!p.contains("pairs")) return dipole.support();
    if (!p["pairs"].is_array() || p["pairs"].empty()) bad_param("pairs", "must be a non-empty array");
    std::vector<LevelPair> out;
    for (const auto& v : p["pairs"]) {
        auto pair = parse_pair(v, "params.pairs");
        if (pair.l > pair.k) std::swap(pair.l, pair.k);
        if (pair.k >= dipole.dimension()) bad_param("pairs", "refers to level " + std::to_string(pair.k + 1));
        out.push_back(pair);
    }
    return out;
}

std::string pair_label(LevelPair p) {
    return std::to_string(p.l + 1) + "-" + std::to_string(p.k + 1);
}

Json pair_json(LevelPair p) {
    return Json::array({p.l + 1, p.k + 1});
}

Json vector_json(const RVector& v) {
    Json out = Json::array();
    for (Eigen::Index j = 0; j < v.size(); ++j) out.push_back(v(j));
    return out;
}

// Everything a task needs from the file system, and everything it wrote.
struct Context {
    const Scenario& scenario;
    LoadedSystem system;
    Json params;  // with defaults filled in, for the manifest
    std::vector<fs::path> inputs;
    std::vector<std::string> outputs;

    void emit_json(const std::string& name, const Json& doc) {
        write_json(scenario.output_dir / name, doc);
        outputs.push_back(name);
    }
    void emit_text(const std::string& name, const std::string& text) {
        write_text(scenario.output_dir / name, text);
        outputs.push_back(name);
    }
    fs::path input(const fs::path& path) {
        inputs.push_back(path);
        return path;
    }
};

std::vector<ControlWaveform> synthesized_controls(Context& ctx, double xi, Json& described) {
    const auto policy = policy_from(ctx.scenario.params);
    const auto set = build_control_set(ctx.system.spec, ctx.system.dipole, xi, ramsey_from(ctx.scenario.params, policy));
    std::vector<ControlWaveform> controls;
    described = Json::array();
    for (const auto& c : set) {
        controls.push_back(c.control);
        described.push_back({{"pair", pair_json(c.pair)},
                             {"xi", c.xi},
                             {"tau1", c.tau1},
                             {"tau2", c.tau2},
                             {"horizon", c.horizon},
                             {"fidelity1", c.fidelity1},
                             {"fidelity2", c.fidelity2}});
    }
    return controls;
}

// Controls from "controls": [paths] if given, otherwise synthesized at "xi".
std::vector<ControlWaveform> control_set(Context& ctx, double default_xi, Json& described) {
    const Json& p = ctx.scenario.params;
    if (p.contains("controls")) {
        if (!p["controls"].is_array() || p["controls"].empty()) bad_param("controls", "must be a non-empty array");
        std::vector<ControlWaveform> controls;
        described = Json::array();
        for (const auto& v : p["controls"]) {
            if (!v.is_string()) bad_param("controls", "must contain file paths");
            controls.push_back(load_control(ctx.input(v.get<std::string>())));
            described.push_back({{"file", v}});
        }
        ctx.params["controls"] = p["controls"];
        return controls;
    }
    const double xi = param_double(p, "xi", default_xi, 0.0, 0.1, true);
    ctx.params["xi"] = xi;
    return synthesized_controls(ctx, xi, described);
}

Json run_simulate(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    const auto& spec = ctx.system.spec;
    const auto& mu = ctx.system.dipole;
    ControlWaveform control;
    if (p.contains("control")) {
        control = load_control(ctx.input(p["control"].get<std::string>()));
    } else {
        control = ControlWaveform::zero(param_double(p, "horizon", 10.0, 0.0, 1e7));
        ctx.params["horizon"] = control.horizon();
    }
    const long stride = param_int(p, "stride", 0, 0, 1L << 40);
    ctx.params["stride"] = stride;

    Trajectory traj;
    const auto psi = evolve_state(spec, mu, control, QuantumState::basis(spec.dimension(), spec.initial()), 0.0,
                                  control.horizon(), policy, stride > 0 ? &traj : nullptr,
                                  static_cast<std::size_t>(stride));
    const auto u = propagator(spec, mu, control, 0.0, control.horizon(), policy).matrix;

    Json populations = Json::array();
    for (int k = 0; k < spec.dimension(); ++k) populations.push_back(std::norm(psi.vector()(k)));
    const Json result = {{"population", std::norm(psi.vector()(spec.measured()))},
                         {"populations", populations},
                         {"horizon", control.horizon()},
                         {"steps", count_steps(spec, mu, control, 0.0, control.horizon(), policy)},
                         {"unitarity_defect", unitarity_defect(u)},
                         {"norm_drift", std::abs(psi.vector().norm() - 1.0)}};
    ctx.emit_json("simulate.json", result);

    if (stride > 0) {
        std::ostringstream csv;
        csv << "tau";
        for (int k = 0; k < spec.dimension(); ++k) csv << ",p" << k + 1;
        csv << "\n";
        for (std::size_t j = 0; j < traj.times.size(); ++j) {
            csv << format_double(traj.times[j]);
            for (int k = 0; k < spec.dimension(); ++k) csv << "," << format_double(std::norm(traj.states[j](k)));
            csv << "\n";
        }
        ctx.emit_text("trajectory.csv", csv.str());
    }
    return result;
}

Json run_sensitivity(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    if (!p.contains("control")) bad_param("control", "is required for sensitivity");
    const auto control = load_control(ctx.input(p["control"].get<std::string>()));
    const double h = param_double(p, "fd_step", 1e-5, 0.0, 0.1, true);
    ctx.params["fd_step"] = h;
    const auto pairs = pairs_from(p, ctx.system.dipole);
    const auto& spec = ctx.system.spec;
    const auto& mu = ctx.system.dipole;

    const RVector analytic = dp_dmu_pairs(spec, mu, control, pairs, policy);
    std::ostringstream csv;
    csv << "pair,analytic,finite_difference,abs_error\n";
    Json rows = Json::array();
    double worst = 0.0;
    bool noisy = false;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const auto fd = fd_oracle(spec, mu, control, pairs[j], h, policy);
        const double a = analytic(static_cast<Eigen::Index>(j));
        const double err = std::abs(a - fd.value);
        worst = std::max(worst, err);
        noisy = noisy || fd.below_noise_floor;
        csv << pair_label(pairs[j]) << "," << format_double(a) << "," << format_double(fd.value) << ","
            << format_double(err) << "\n";
        rows.push_back({{"pair", pair_json(pairs[j])},
                        {"analytic", a},
                        {"finite_difference", fd.value},
                        {"abs_error", err},
                        {"noise_floor", fd.noise_floor}});
    }
    ctx.emit_text("sensitivity.csv", csv.str());
    const Json result = {{"population", population(spec, mu, control, policy)},
                         {"max_abs_error", worst},
                         {"fd_noise_warning", noisy},
                         {"rows", rows}};
    ctx.emit_json("sensitivity.json", result);
    return result;
}

Json run_synthesize(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    const double xi = param_double(p, "xi", 0.02, 0.0, 0.1, true);
    ctx.params["xi"] = xi;
    const auto cfg = ramsey_from(p, policy);
    const auto& spec = ctx.system.spec;
    const auto& mu = ctx.system.dipole;

    std::vector<DiscriminatingControl> set;
    if (p.contains("pairs")) {
        double horizon = 0.0;
        for (const auto pair : pairs_from(p, mu)) {
            set.push_back(build_discriminating_control(spec, mu, pair, xi, cfg));
            horizon = std::max(horizon, set.back().horizon);
        }
        for (auto& c : set) c.control = c.control.padded_to(horizon);
    } else {
        set = build_control_set(spec, mu, xi, cfg);
    }

    Json list = Json::array();
    for (const auto& c : set) {
        const std::string file = "control_" + pair_label(c.pair) + ".json";
        ctx.emit_json(file, control_to_json(c.control));
        list.push_back({{"file", file},
                        {"pair", pair_json(c.pair)},
                        {"xi", c.xi},
                        {"tau1", c.tau1},
                        {"tau2", c.tau2},
                        {"horizon", c.horizon},
                        {"padded_horizon", c.control.horizon()},
                        {"fidelity1", c.fidelity1},
                        {"fidelity2", c.fidelity2}});
    }
    const Json result = {{"controls", list}};
    ctx.emit_json("controls.json", result);
    return result;
}

Json run_verify_lemma(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    const auto grid = param_list(p, "xi_grid", {0.04, 0.02, 0.01}, 0.0, 0.1);
    ctx.params["xi_grid"] = grid;
    const auto& spec = ctx.system.spec;
    const auto& mu = ctx.system.dipole;
    const auto support = mu.support();

    // Scaled sensitivities 2 xi dP/dmu' for each discriminating control.
    std::ostringstream s1;
    s1 << "xi,control_pair,pair,sensitivity,scaled\n";
    Json on_target = Json::array();
    double worst_off = 0.0;
    for (const double xi : grid) {
        Json described;
        const auto controls = synthesized_controls(ctx, xi, described);
        for (std::size_t c = 0; c < controls.size(); ++c) {
            const auto sens = dp_dmu(spec, mu, controls[c], policy);
            for (std::size_t j = 0; j < support.size(); ++j) {
                const double d = sens.values(static_cast<Eigen::Index>(j));
                s1 << format_double(xi) << "," << pair_label(support[c]) << "," << pair_label(support[j]) << ","
                   << format_double(d) << "," << format_double(2.0 * xi * d) << "\n";
                if (j == c) {
                    on_target.push_back({{"xi", xi}, {"pair", pair_json(support[c])}, {"scaled", 2.0 * xi * d}});
                } else {
                    worst_off = std::max(worst_off, std::abs(2.0 * xi * d));
                }
            }
        }
    }
    ctx.emit_text("sensitivity_scaling.csv", s1.str());

    // Averaged against full propagator, and K itself.
    std::ostringstream s2;
    s2 << "xi,pair,sup_error,error_over_xi\n";
    Json k_report = Json::array();
    for (const auto pair : support) {
        const auto k = k_matrix(spec, mu, pair);
        k_report.push_back({{"pair", pair_json(pair)},
                            {"hermiticity_defect", max_norm(k.k - k.k.adjoint())},
                            {"k_real", matrix_to_json(k.k.real())},
                            {"k_imag", matrix_to_json(k.k.imag())}});
        for (const double xi : grid) {
            const auto e = averaging_error(spec, mu, pair, xi, policy);
            s2 << format_double(xi) << "," << pair_label(pair) << "," << format_double(e.sup_error) << ","
               << format_double(e.sup_error / xi) << "\n";
        }
    }
    ctx.emit_text("averaging_error.csv", s2.str());

    const Json result = {{"on_target", on_target}, {"max_off_target_scaled", worst_off}, {"k", k_report}};
    ctx.emit_json("verify_lemma.json", result);
    return result;
}

Json run_identify(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    const auto& spec = ctx.system.spec;
    const auto& truth = ctx.system.dipole;
    Json described;
    const auto controls = control_set(ctx, 0.04, described);

    std::vector<MeasurementRecord> records;
    if (p.contains("records")) {
        records = parse_records(load_json(ctx.input(p["records"].get<std::string>())), "records");
    } else {
        const double variance = param_double(p, "variance", 0.0, 0.0, 1.0);
        const auto seed = static_cast<std::uint64_t>(param_int(p, "seed", 1, 0, 1L << 62));
        ctx.params["variance"] = variance;
        ctx.params["seed"] = seed;
        records = simulate_records(spec, truth, controls, variance, seed, policy);
    }
    for (const auto& r : records) {
        if (r.control_id >= controls.size()) bad_param("records", "refer to a control that does not exist");
    }

    DipoleMatrix initial = truth;
    if (p.contains("initial_dipole")) {
        const Json doc = load_json(ctx.input(p["initial_dipole"].get<std::string>()));
        const RMatrix raw = parse_matrix(doc.is_object() ? doc.at("dipole") : doc, "initial_dipole");
        const auto candidate = DipoleMatrix::from_matrix(raw);
        if (candidate.dimension() != truth.dimension() || candidate.support() != truth.support()) {
            bad_param("initial_dipole", "must have the same support as the system dipole");
        }
        initial = truth.with_support_values(candidate.support_values());
    } else {
        // Random direction on the support, fixed length.
        const double size = param_double(p, "perturbation", 1e-3, 0.0, 0.5);
        const auto seed = static_cast<std::uint64_t>(param_int(p, "perturbation_seed", 7, 0, 1L << 62));
        ctx.params["perturbation"] = size;
        ctx.params["perturbation_seed"] = seed;
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        RVector dir(truth.support_size());
        for (Eigen::Index j = 0; j < dir.size(); ++j) dir(j) = gauss(rng);
        initial = truth.with_support_values(truth.support_values() + size * dir / dir.norm());
    }

    IdentifyConfig cfg;
    cfg.policy = policy;
    cfg.max_iterations = static_cast<int>(param_int(p, "max_iterations", cfg.max_iterations, 1, 100000));
    const auto result = local_identify(spec, controls, records, initial, cfg);
    const RVector error = result.estimate.support_values() - truth.support_values();

    ctx.emit_json("records.json", records_to_json(records));
    ctx.emit_json("estimate.json", {{"dipole", matrix_to_json(result.estimate.physical())}});
    const Json summary = {{"controls", described},
                          {"support", [&] {
                               Json s = Json::array();
                               for (const auto pair : truth.support()) s.push_back(pair_json(pair));
                               return s;
                           }()},
                          {"estimate", vector_json(result.estimate.support_values())},
                          {"initial", vector_json(initial.support_values())},
                          {"reference", vector_json(truth.support_values())},
                          {"max_abs_error", error.cwiseAbs().maxCoeff()},
                          {"cost", result.cost},
                          {"gradient_norm", result.gradient_norm},
                          {"alpha", result.alpha},
                          {"iterations", result.iterations},
                          {"converged", result.converged},
                          {"status", result.status}};
    ctx.emit_json("identify.json", summary);
    return summary;
}

Json run_noise_study(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    Json described;
    const auto controls = control_set(ctx, 0.04, described);
    const auto variances = param_list(p, "variances", {1e-8, 1e-6, 1e-4}, 0.0, 1.0);
    const int trials = static_cast<int>(param_int(p, "trials", 50, 1, 1000000));
    const auto seed = static_cast<std::uint64_t>(param_int(p, "seed", 1, 0, 1L << 62));
    ctx.params["variances"] = variances;
    ctx.params["trials"] = trials;
    ctx.params["seed"] = seed;

    IdentifyConfig cfg;
    cfg.policy = policy;
    const auto study = noise_study(ctx.system.spec, ctx.system.dipole, controls, variances, trials, seed, cfg);

    std::ostringstream csv;
    csv << "var,rms_error,predicted_radius,nonconverged\n";
    Json rows = Json::array();
    std::vector<double> vars;
    std::vector<double> rms;
    for (const auto& r : study.rows) {
        csv << format_double(r.variance) << "," << format_double(r.rms_error) << ","
            << format_double(r.predicted_radius) << "," << r.nonconverged << "\n";
        rows.push_back({{"var", r.variance},
                        {"rms_error", r.rms_error},
                        {"predicted_radius", r.predicted_radius},
                        {"nonconverged", r.nonconverged},
                        {"within_three_radii", r.within_three_radii},
                        {"errors", r.errors}});
        vars.push_back(r.variance);
        rms.push_back(r.rms_error);
    }
    ctx.emit_text("noise.csv", csv.str());
    Json result = {{"alpha", study.alpha}, {"controls", described}, {"rows", rows}};
    if (vars.size() >= 2) result["log_log_slope"] = log_log_slope(vars, rms);
    ctx.emit_json("noise.json", result);
    return result;
}

Json run_certify_alpha(Context& ctx) {
    const Json& p = ctx.scenario.params;
    const auto policy = policy_from(p);
    Json described;
    const auto controls = control_set(ctx, 0.02, described);
    double fallback = 0.0;
    if (ctx.params.contains("xi")) {
        const double xi = ctx.params["xi"].get<double>();
        fallback = 0.8 / (4.0 * xi * xi);
    }
    const double target = param_double(p, "alpha_target", fallback, 0.0, 1e300);
    ctx.params["alpha_target"] = target;
    const auto report = alpha_convexity(ctx.system.spec, ctx.system.dipole, controls, target, policy);
    const Json result = {{"alpha", report.alpha},
                         {"alpha_target", report.alpha_target},
                         {"certified", report.certified},
                         {"eigenvalues", vector_json(report.eigenvalues)},
                         {"hessian", matrix_to_json(report.hessian)},
                         {"suggested_xi", report.suggested_xi},
                         {"controls", described}};
    ctx.emit_json("alpha.json", result);
    return result;
}

Json dispatch(Context& ctx) {
    const auto& task = ctx.scenario.task;
    if (task == "simulate") return run_simulate(ctx);
    if (task == "sensitivity") return run_sensitivity(ctx);
    if (task == "synthesize") return run_synthesize(ctx);
    if (task == "verify-lemma") return run_verify_lemma(ctx);
    if (task == "identify") return run_identify(ctx);
    if (task == "noise-study") return run_noise_study(ctx);
    if (task == "certify-alpha") return run_certify_alpha(ctx);
    throw ValidationError("unknown task '" + task + "'");
}

Json error_json(const std::string& kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw ConsistencyError("SHA-256 failed");
    }
    std::ostringstream ss;
    for (unsigned int j = 0; j < len; ++j) ss << std::hex << std::setw(2) << std::setfill('0') << int(digest[j]);
    return ss.str();
}

Scenario parse_scenario(const Json& doc, const fs::path& base, const std::string& where) {
    if (!doc.is_object()) throw ValidationError("schema: " + where + ": expected an object");
    auto str = [&](const char* key) -> std::string {
        if (!doc.contains(key)) throw ValidationError("schema: " + where + ": missing field '" + key + "'");
        if (!doc[key].is_string()) throw ValidationError("schema: " + where + ": '" + key + "' must be a string");
        return doc[key].get<std::string>();
    };
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    Scenario s;
    s.task = str("task");
    s.system = resolve(str("system"));
    if (doc.contains("dipole")) s.dipole = resolve(str("dipole"));
    s.output_dir = doc.contains("output_dir") ? resolve(str("output_dir")) : base;
    if (doc.contains("params")) {
        if (!doc["params"].is_object()) throw ValidationError("schema: " + where + ": 'params' must be an object");
        s.params = doc["params"];
    }
    for (const char* key : kFileParams) {
        if (s.params.contains(key)) {
            if (!s.params[key].is_string()) bad_param(key, "must be a file path");
            s.params[key] = resolve(s.params[key].get<std::string>()).string();
        }
    }
    if (s.params.contains("controls") && s.params["controls"].is_array()) {
        for (auto& v : s.params["controls"]) {
            if (v.is_string()) v = resolve(v.get<std::string>()).string();
        }
    }
    return s;
}

Scenario load_scenario(const fs::path& path) {
    return parse_scenario(load_json(path), path.parent_path(), path.string());
}

int run(const Scenario& scenario, std::ostream& out, std::ostream& err) {
    auto fail = [&](const std::string& kind, const std::string& message) {
        const Json e = error_json(kind, message);
        err << e.dump() << "\n";
        std::error_code ec;
        if (fs::is_directory(scenario.output_dir, ec)) {
            try {
                write_json(scenario.output_dir / "error.json", e);
            } catch (const std::exception&) {
            }
        }
        return 2;
    };
    try {
        fs::create_directories(scenario.output_dir);
        for (const auto& key : {std::string("control"), std::string("records"), std::string("initial_dipole")}) {
            if (scenario.params.contains(key) && !fs::exists(scenario.params[key].get<std::string>())) {
                throw ValidationError("parameter '" + key + "' names a missing file " +
                                      scenario.params[key].get<std::string>());
            }
        }
        Context ctx{scenario, load_system(scenario.system, scenario.dipole), scenario.params, {}, {}};
        ctx.inputs.push_back(scenario.system);
        if (scenario.dipole) ctx.inputs.push_back(*scenario.dipole);
        fs::remove(scenario.output_dir / "error.json");

        const Json summary = dispatch(ctx);
        const auto policy = policy_from(scenario.params);
        Json step_policy = {{"stepper", policy.stepper == Stepper::Magnus4 ? "magnus4" : "midpoint"},
                            {"points_per_period", policy.points_per_period},
                            {"field_factor", policy.field_factor}};
        if (std::isfinite(policy.max_dt)) step_policy["max_dt"] = policy.max_dt;
        ctx.params["step_policy"] = step_policy;
        // File names only, so the manifest does not depend on the working directory.
        for (const char* key : kFileParams) {
            if (ctx.params.contains(key)) ctx.params[key] = fs::path(ctx.params[key].get<std::string>()).filename();
        }
        if (ctx.params.contains("controls")) {
            for (auto& v : ctx.params["controls"]) v = fs::path(v.get<std::string>()).filename();
        }

        Json inputs = Json::array();
        std::string all;
        for (const auto& path : ctx.inputs) {
            const std::string bytes = read_file(path);
            const std::string h = sha256_hex(bytes);
            inputs.push_back({{"path", path.filename().string()}, {"sha256", h}});
            all += h;
        }
        all += ctx.params.dump();
        const Json manifest = {{"tool", kToolVersion},
                               {"task", scenario.task},
                               {"inputs", inputs},
                               {"inputs_sha256", sha256_hex(all)},
                               {"parameters", ctx.params},
                               {"outputs", ctx.outputs}};
        write_json(scenario.output_dir / "manifest.json", manifest);
        out << Json{{"task", scenario.task}, {"result", summary}}.dump() << "\n";
        return 0;
    } catch (const Error& e) {
        return fail(e.kind(), e.what());
    } catch (const Json::exception& e) {
        return fail("validation", std::string("schema: ") + e.what());
    } catch (const fs::filesystem_error& e) {
        return fail("io", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
}

}  // namespace dipid::app

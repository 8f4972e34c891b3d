// dipid: dipole identification experiments from the command line.

#include "runner.hpp"

#include "dipid/error.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <map>

namespace {

using dipid::app::Json;

struct Flags {
    std::string system;
    std::string dipole;
    std::string out = ".";
    std::string control;
    std::vector<std::string> controls;
    std::string records;
    std::string initial_dipole;
    std::vector<std::string> pairs;
    double xi = 0.0;
    std::vector<double> xi_grid;
    std::vector<double> variances;
    double variance = 0.0;
    long trials = 0;
    long seed = 0;
    long steer_seed = 0;
    long perturbation_seed = 0;
    double perturbation = 0.0;
    double alpha_target = 0.0;
    double fd_step = 0.0;
    double horizon = 0.0;
    long stride = 0;
    long max_iterations = 0;
    std::string stepper;
    double points_per_period = 0.0;
    double field_factor = 0.0;
    double max_dt = 0.0;
};

// Options shared by every task; only flags actually given end up in params.
void add_common(CLI::App* sub, Flags& f) {
    sub->add_option("--system", f.system, "System JSON: energies, dipole, initial and measured levels (1-based)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--dipole", f.dipole, "Dipole JSON overriding the one in the system file")
        ->check(CLI::ExistingFile);
    sub->add_option("--out", f.out, "Output directory (created if missing)")->capture_default_str();
    sub->add_option("--stepper", f.stepper, "Integrator for resonant pieces: magnus4 (default) or midpoint")
        ->check(CLI::IsMember({"magnus4", "midpoint"}));
    sub->add_option("--points-per-period", f.points_per_period,
                    "Steps per period of the fastest transition (default 20)");
    sub->add_option("--field-factor", f.field_factor, "Step bound as a fraction of 1/(kappa max|eps|) (default 0.1)");
    sub->add_option("--max-dt", f.max_dt, "Hard upper bound on the step (normalized time)");
}

void add_controls(CLI::App* sub, Flags& f, const char* xi_help) {
    sub->add_option("--xi", f.xi, xi_help);
    sub->add_option("--controls", f.controls, "Control JSON files to use instead of synthesizing a set")
        ->check(CLI::ExistingFile);
    sub->add_option("--steer-seed", f.steer_seed, "Seed for the steering optimizer restarts (default 1)");
}

Json collect_params(const CLI::App* sub, const Flags& f) {
    Json p = Json::object();
    auto has = [&](const char* name) {
        try {
            return sub->count(name) > 0;
        } catch (const CLI::OptionNotFound&) {
            return false;
        }
    };
    if (has("--stepper")) p["stepper"] = f.stepper;
    if (has("--points-per-period")) p["points_per_period"] = f.points_per_period;
    if (has("--field-factor")) p["field_factor"] = f.field_factor;
    if (has("--max-dt")) p["max_dt"] = f.max_dt;
    if (has("--control")) p["control"] = f.control;
    if (has("--controls")) p["controls"] = f.controls;
    if (has("--records")) p["records"] = f.records;
    if (has("--initial-dipole")) p["initial_dipole"] = f.initial_dipole;
    if (has("--pair")) p["pairs"] = f.pairs;
    if (has("--xi")) p["xi"] = f.xi;
    if (has("--xi-grid")) p["xi_grid"] = f.xi_grid;
    if (has("--var")) p["variances"] = f.variances;
    if (has("--variance")) p["variance"] = f.variance;
    if (has("--trials")) p["trials"] = f.trials;
    if (has("--seed")) p["seed"] = f.seed;
    if (has("--steer-seed")) p["steer_seed"] = f.steer_seed;
    if (has("--perturbation")) p["perturbation"] = f.perturbation;
    if (has("--perturbation-seed")) p["perturbation_seed"] = f.perturbation_seed;
    if (has("--alpha-target")) p["alpha_target"] = f.alpha_target;
    if (has("--fd-step")) p["fd_step"] = f.fd_step;
    if (has("--horizon")) p["horizon"] = f.horizon;
    if (has("--stride")) p["stride"] = f.stride;
    if (has("--max-iterations")) p["max_iterations"] = f.max_iterations;
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dipid: dipole-matrix identification from population measurements.\n"
                 "Every task writes its artifacts and manifest.json into --out.\n"
                 "Set DIPID_THREADS to parallelize noise-study trials."};
    app.set_version_flag("--version", dipid::app::kToolVersion);
    app.require_subcommand(1);
    Flags f;
    std::map<std::string, CLI::App*> subs;

    auto* sim = app.add_subcommand("simulate", "Propagate |i> under a control and report populations");
    add_common(sim, f);
    sim->add_option("--control", f.control, "Control JSON (default: zero field)")->check(CLI::ExistingFile);
    sim->add_option("--horizon", f.horizon, "Horizon of the zero-field control when --control is absent (default 10)");
    sim->add_option("--stride", f.stride, "Write trajectory.csv with every stride-th step (default 0: none)");
    subs["simulate"] = sim;

    auto* sens = app.add_subcommand("sensitivity", "Analytic dP/dmu' against central finite differences");
    add_common(sens, f);
    sens->add_option("--control", f.control, "Control JSON")->required()->check(CLI::ExistingFile);
    sens->add_option("--fd-step", f.fd_step, "Finite-difference step h (default 1e-5)");
    sens->add_option("--pair", f.pairs, "Level pair l-k, 1-based; repeatable (default: the dipole support)");
    subs["sensitivity"] = sens;

    auto* syn = app.add_subcommand("synthesize", "Build discriminating three-segment controls");
    add_common(syn, f);
    syn->add_option("--xi", f.xi, "Resonant drive strength in (0, 0.1] (default 0.02)");
    syn->add_option("--pair", f.pairs, "Target pair l-k, 1-based; repeatable (default: the dipole support)");
    syn->add_option("--steer-seed", f.steer_seed, "Seed for the steering optimizer restarts (default 1)");
    subs["synthesize"] = syn;

    auto* lem = app.add_subcommand("verify-lemma", "Sensitivity scaling and averaging error across a xi grid");
    add_common(lem, f);
    lem->add_option("--xi-grid", f.xi_grid, "Drive strengths (default 0.04 0.02 0.01)");
    lem->add_option("--steer-seed", f.steer_seed, "Seed for the steering optimizer restarts (default 1)");
    subs["verify-lemma"] = lem;

    auto* idf = app.add_subcommand("identify", "Local Gauss-Newton identification of the dipole support values");
    add_common(idf, f);
    add_controls(idf, f, "Drive strength of the synthesized control set (default 0.04)");
    idf->add_option("--records", f.records, "Measurement records JSON (default: simulate from the system dipole)")
        ->check(CLI::ExistingFile);
    idf->add_option("--variance", f.variance, "Noise variance of simulated records (default 0)");
    idf->add_option("--seed", f.seed, "Noise seed of simulated records (default 1)");
    idf->add_option("--initial-dipole", f.initial_dipole, "Starting dipole JSON (default: perturbed system dipole)")
        ->check(CLI::ExistingFile);
    idf->add_option("--perturbation", f.perturbation, "Length of the random start offset (default 1e-3)");
    idf->add_option("--perturbation-seed", f.perturbation_seed, "Seed of the start offset direction (default 7)");
    idf->add_option("--max-iterations", f.max_iterations, "Gauss-Newton iteration cap (default 100)");
    subs["identify"] = idf;

    auto* noise = app.add_subcommand("noise-study", "RMS estimation error against the predicted noise radius");
    add_common(noise, f);
    add_controls(noise, f, "Drive strength of the synthesized control set (default 0.04)");
    noise->add_option("--var", f.variances, "Noise variances (default 1e-8 1e-6 1e-4)");
    noise->add_option("--trials", f.trials, "Trials per variance (default 50)");
    noise->add_option("--seed", f.seed, "Base seed (default 1)");
    subs["noise-study"] = noise;

    auto* alpha = app.add_subcommand("certify-alpha", "Smallest eigenvalue of the cost Hessian over a control set");
    add_common(alpha, f);
    add_controls(alpha, f, "Drive strength of the synthesized control set (default 0.02)");
    alpha->add_option("--alpha-target", f.alpha_target, "Certificate threshold (default 0.8/(4 xi^2))");
    subs["certify-alpha"] = alpha;

    std::string scenario_file;
    auto* run = app.add_subcommand("run", "Run a scenario JSON file");
    run->add_option("--scenario", scenario_file, "Scenario JSON: task, system, dipole, output_dir, params")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << Json{{"error", {{"kind", "usage"}, {"message", e.what()}}}}.dump() << "\n";
        return 2;
    }

    dipid::app::Scenario scenario;
    if (run->parsed()) {
        try {
            scenario = dipid::app::load_scenario(scenario_file);
        } catch (const dipid::Error& e) {
            std::cerr << Json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << "\n";
            return 2;
        }
    } else {
        for (const auto& [name, sub] : subs) {
            if (!sub->parsed()) continue;
            scenario.task = name;
            scenario.system = f.system;
            if (!f.dipole.empty()) scenario.dipole = f.dipole;
            scenario.output_dir = f.out;
            scenario.params = collect_params(sub, f);
        }
    }
    return dipid::app::run(scenario, std::cout, std::cerr);
}

#include "dipid/identify.hpp"

#include "dipid/error.hpp"
#include "dipid/sensitivity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

namespace dipid {

namespace {

std::mt19937_64 stream_for(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    return std::mt19937_64(seq);
}

void check_records(std::span<const ControlWaveform> controls, std::span<const MeasurementRecord> records) {
    for (const auto& r : records) {
        if (r.control_id >= controls.size()) {
            throw ValidationError("record refers to control " + std::to_string(r.control_id) + " of " +
                                  std::to_string(controls.size()));
        }
    }
}

int thread_count(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("DIPID_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

}  // namespace

std::vector<MeasurementRecord> simulate_records(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                std::span<const ControlWaveform> controls, double variance,
                                                std::uint64_t seed, const StepPolicy& policy) {
    if (!(variance >= 0.0) || !std::isfinite(variance)) throw ValidationError("noise variance must be >= 0");
    auto rng = stream_for(seed, 0, 0);
    std::normal_distribution<double> noise(0.0, std::sqrt(variance));
    std::vector<MeasurementRecord> out;
    for (std::size_t k = 0; k < controls.size(); ++k) {
        MeasurementRecord r;
        r.control_id = k;
        r.value = population(spec, dipole, controls[k], policy);
        if (variance > 0.0) r.value += noise(rng);
        r.variance = variance;
        r.seed = seed;
        out.push_back(r);
    }
    return out;
}

CostEvaluation evaluate_cost(const SystemSpec& spec, const DipoleMatrix& candidate,
                             std::span<const ControlWaveform> controls, std::span<const MeasurementRecord> records,
                             const StepPolicy& policy) {
    check_records(controls, records);
    const auto m = static_cast<Eigen::Index>(candidate.support_size());
    const auto n = static_cast<Eigen::Index>(records.size());
    CostEvaluation out;
    out.residuals.resize(n);
    out.jacobian.resize(n, m);
    std::vector<int> done(controls.size(), -1);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto id = records[static_cast<std::size_t>(j)].control_id;
        if (done[id] >= 0) {
            out.jacobian.row(j) = out.jacobian.row(done[id]);
            out.residuals(j) = out.residuals(done[id]) + records[static_cast<std::size_t>(done[id])].value -
                               records[static_cast<std::size_t>(j)].value;
            continue;
        }
        const auto s = dp_dmu(spec, candidate, controls[id], policy);
        out.jacobian.row(j) = s.values.transpose();
        out.residuals(j) = s.population - records[static_cast<std::size_t>(j)].value;
        done[id] = static_cast<int>(j);
    }
    out.cost = out.residuals.squaredNorm();
    out.gradient = 2.0 * out.jacobian.transpose() * out.residuals;
    return out;
}

double cost_j(const SystemSpec& spec, const DipoleMatrix& candidate, std::span<const ControlWaveform> controls,
              std::span<const MeasurementRecord> records, const StepPolicy& policy) {
    check_records(controls, records);
    double j = 0.0;
    for (const auto& r : records) {
        const double d = population(spec, candidate, controls[r.control_id], policy) - r.value;
        j += d * d;
    }
    return j;
}

RMatrix hessian_j(const SystemSpec& spec, const DipoleMatrix& candidate, std::span<const ControlWaveform> controls,
                  const StepPolicy& policy) {
    const int m = candidate.support_size();
    RMatrix h = RMatrix::Zero(m, m);
    for (const auto& c : controls) {
        const RVector g = dp_dmu(spec, candidate, c, policy).values;
        h += g * g.transpose();
    }
    return h;
}

AlphaReport alpha_convexity(const SystemSpec& spec, const DipoleMatrix& dipole,
                            std::span<const ControlWaveform> controls, double alpha_target,
                            const StepPolicy& policy) {
    AlphaReport out;
    out.alpha_target = alpha_target;
    out.hessian = hessian_j(spec, dipole, controls, policy);
    out.eigenvalues = Eigen::SelfAdjointEigenSolver<RMatrix>(out.hessian, Eigen::EigenvaluesOnly).eigenvalues();
    out.alpha = out.eigenvalues.size() > 0 ? out.eigenvalues.minCoeff() : 0.0;
    out.certified = out.alpha >= alpha_target;
    if (alpha_target > 0.0) out.suggested_xi = 1.0 / (2.0 * std::sqrt(alpha_target));
    return out;
}

IdentificationResult local_identify(const SystemSpec& spec, std::span<const ControlWaveform> controls,
                                    std::span<const MeasurementRecord> records, const DipoleMatrix& initial,
                                    const IdentifyConfig& config) {
    if (records.empty()) throw ValidationError("identification needs at least one record");
    RVector theta = initial.support_values();
    DipoleMatrix current = initial;
    auto eval = evaluate_cost(spec, current, controls, records, config.policy);

    IdentificationResult out{current, 0.0, 0.0, RMatrix(), 0.0, 0, false, "iteration limit"};
    double lambda = 0.0;
    for (int it = 0; it <= config.max_iterations; ++it) {
        if (eval.gradient.norm() <= config.gradient_tolerance) {
            out.converged = true;
            out.status = "gradient tolerance";
            break;
        }
        if (it == config.max_iterations) break;

        // Gauss-Newton on r: (G^T G + lambda D) delta = -G^T r.
        const RMatrix h = eval.jacobian.transpose() * eval.jacobian;
        const RVector rhs = -eval.jacobian.transpose() * eval.residuals;
        const double scale = std::max(h.diagonal().maxCoeff(), 1e-300);
        bool accepted = false;
        bool tiny_step = false;
        for (int tries = 0; tries < 40; ++tries) {
            RMatrix a = h;
            a.diagonal().array() += lambda * scale + (lambda > 0.0 ? 0.0 : 1e-15 * scale);
            const RVector delta = a.ldlt().solve(rhs);
            if (!delta.allFinite()) {
                lambda = std::max(lambda * 10.0, 1e-8);
                continue;
            }
            if (delta.norm() <= config.step_tolerance * (1.0 + theta.norm())) {
                tiny_step = true;
                break;
            }
            const RVector trial = theta + delta;
            const DipoleMatrix candidate = initial.with_support_values(trial);
            auto trial_eval = evaluate_cost(spec, candidate, controls, records, config.policy);
            if (std::isfinite(trial_eval.cost) && trial_eval.cost <= eval.cost) {
                theta = trial;
                current = candidate;
                eval = std::move(trial_eval);
                lambda = lambda > 0.0 ? lambda / 10.0 : 0.0;
                if (lambda < 1e-12) lambda = 0.0;
                accepted = true;
                break;
            }
            lambda = std::max(lambda * 10.0, 1e-8);
        }
        ++out.iterations;
        if (tiny_step) {
            out.converged = true;
            out.status = "step tolerance";
            break;
        }
        if (!accepted) {
            out.status = "diverged: cost does not decrease under full damping";
            break;
        }
    }
    out.estimate = current;
    out.cost = eval.cost;
    out.gradient_norm = eval.gradient.norm();
    out.hessian = eval.jacobian.transpose() * eval.jacobian;
    out.alpha = out.hessian.size() > 0
                    ? Eigen::SelfAdjointEigenSolver<RMatrix>(out.hessian, Eigen::EigenvaluesOnly).eigenvalues().minCoeff()
                    : 0.0;
    return out;
}

NoiseStudy noise_study(const SystemSpec& spec, const DipoleMatrix& truth, std::span<const ControlWaveform> controls,
                       std::span<const double> variances, int trials, std::uint64_t seed,
                       const IdentifyConfig& config, int threads) {
    if (trials < 1) throw ValidationError("noise study needs at least one trial");
    NoiseStudy out;
    out.alpha = alpha_convexity(spec, truth, controls, 0.0, config.policy).alpha;

    std::vector<double> clean;
    for (const auto& c : controls) clean.push_back(population(spec, truth, c, config.policy));
    const RVector theta = truth.support_values();

    for (std::size_t v = 0; v < variances.size(); ++v) {
        const double var = variances[v];
        if (!(var >= 0.0)) throw ValidationError("noise variance must be >= 0");
        std::vector<double> errors(static_cast<std::size_t>(trials), 0.0);
        std::vector<char> converged(static_cast<std::size_t>(trials), 0);

        auto run_trial = [&](int t) {
            auto rng = stream_for(seed, v + 1, static_cast<std::uint64_t>(t));
            std::normal_distribution<double> noise(0.0, std::sqrt(var));
            std::vector<MeasurementRecord> records;
            for (std::size_t k = 0; k < controls.size(); ++k) {
                records.push_back({k, clean[k] + (var > 0.0 ? noise(rng) : 0.0), var, seed});
            }
            const auto r = local_identify(spec, controls, records, truth, config);
            errors[static_cast<std::size_t>(t)] = (r.estimate.support_values() - theta).norm();
            converged[static_cast<std::size_t>(t)] = r.converged ? 1 : 0;
        };

        const int workers = std::min(thread_count(threads), trials);
        if (workers <= 1) {
            for (int t = 0; t < trials; ++t) run_trial(t);
        } else {
            std::atomic<int> next{0};
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (int t = next++; t < trials; t = next++) run_trial(t);
                });
            }
            for (auto& th : pool) th.join();
        }

        NoiseStudyRow row;
        row.variance = var;
        row.trials = trials;
        row.predicted_radius = out.alpha > 0.0 ? std::sqrt(var / out.alpha) : 0.0;
        double sq = 0.0;
        int within = 0;
        for (int t = 0; t < trials; ++t) {
            const double e = errors[static_cast<std::size_t>(t)];
            sq += e * e;
            if (e <= 3.0 * row.predicted_radius) ++within;
            if (!converged[static_cast<std::size_t>(t)]) ++row.nonconverged;
        }
        row.rms_error = std::sqrt(sq / trials);
        row.within_three_radii = static_cast<double>(within) / trials;
        row.errors = std::move(errors);
        out.rows.push_back(std::move(row));
    }
    return out;
}

double log_log_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs two or more matching points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(x[j] > 0.0) || !(y[j] > 0.0)) throw ValidationError("log-log slope needs positive data");
        const double a = std::log(x[j]);
        const double b = std::log(y[j]);
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace dipid

// identify.hpp: data-misfit cost over a control set, its Gauss-Newton
// Hessian, alpha-convexity certificates, local inversion and noise studies.

#pragma once

#include "dipid/control.hpp"
#include "dipid/propagate.hpp"
#include "dipid/qsys.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace dipid {

// One measured P_if. Noisy values are kept raw, so they may fall outside [0,1].
struct MeasurementRecord {
    std::size_t control_id = 0;
    double value = 0.0;
    double variance = 0.0;
    std::uint64_t seed = 0;
};

// P_if(control_k, dipole) + N(0, variance) for each control.
std::vector<MeasurementRecord> simulate_records(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                std::span<const ControlWaveform> controls, double variance,
                                                std::uint64_t seed, const StepPolicy& policy = {});

// J = sum_k (P_if(eps_k, candidate) - record_k)^2
double cost_j(const SystemSpec& spec, const DipoleMatrix& candidate, std::span<const ControlWaveform> controls,
              std::span<const MeasurementRecord> records, const StepPolicy& policy = {});

struct CostEvaluation {
    double cost = 0.0;
    RVector residuals;  // P_k(candidate) - record_k
    RMatrix jacobian;   // dP_k / dmu'_p, controls x support
    RVector gradient;   // 2 J^T r
};

CostEvaluation evaluate_cost(const SystemSpec& spec, const DipoleMatrix& candidate,
                             std::span<const ControlWaveform> controls, std::span<const MeasurementRecord> records,
                             const StepPolicy& policy = {});

// sum_k grad P_k grad P_k^T (the residual-free Gauss-Newton form).
RMatrix hessian_j(const SystemSpec& spec, const DipoleMatrix& candidate, std::span<const ControlWaveform> controls,
                  const StepPolicy& policy = {});

struct AlphaReport {
    double alpha = 0.0;  // smallest Hessian eigenvalue
    double alpha_target = 0.0;
    bool certified = false;
    RVector eigenvalues;
    RMatrix hessian;
    // From alpha ~ 1/(4 xi^2): the strength that should reach the target.
    double suggested_xi = 0.0;
};

AlphaReport alpha_convexity(const SystemSpec& spec, const DipoleMatrix& dipole,
                            std::span<const ControlWaveform> controls, double alpha_target,
                            const StepPolicy& policy = {});

struct IdentifyConfig {
    int max_iterations = 100;
    double gradient_tolerance = 1e-10;
    double step_tolerance = 1e-12;  // relative to 1 + ||theta||
    StepPolicy policy;
};

struct IdentificationResult {
    DipoleMatrix estimate;
    double cost = 0.0;
    double gradient_norm = 0.0;
    RMatrix hessian;
    double alpha = 0.0;
    int iterations = 0;
    bool converged = false;
    std::string status;
};

// Damped Gauss-Newton on the support values, starting from initial.
IdentificationResult local_identify(const SystemSpec& spec, std::span<const ControlWaveform> controls,
                                    std::span<const MeasurementRecord> records, const DipoleMatrix& initial,
                                    const IdentifyConfig& config = {});

struct NoiseStudyRow {
    double variance = 0.0;
    int trials = 0;
    double rms_error = 0.0;         // sqrt(mean ||theta_hat - theta||^2)
    double predicted_radius = 0.0;  // sqrt(variance / alpha)
    int nonconverged = 0;
    double within_three_radii = 0.0;  // fraction of trials with error <= 3 radius
    std::vector<double> errors;
};

struct NoiseStudy {
    double alpha = 0.0;
    std::vector<NoiseStudyRow> rows;
};

// Repeated identifications from the truth with fresh noise. Each trial's stream
// depends only on (seed, variance index, trial), so results do not depend on
// scheduling. threads <= 0 reads DIPID_THREADS (default 1).
NoiseStudy noise_study(const SystemSpec& spec, const DipoleMatrix& truth, std::span<const ControlWaveform> controls,
                       std::span<const double> variances, int trials, std::uint64_t seed,
                       const IdentifyConfig& config = {}, int threads = 0);

// Least-squares slope of log y against log x.
double log_log_slope(std::span<const double> x, std::span<const double> y);

}  // namespace dipid

// ramsey.hpp: three-segment discriminating controls: steer |i> to |l>, drive
// (l,k) resonantly for 1/xi^2, then steer the resulting state to |f>.

#pragma once

#include "dipid/control.hpp"
#include "dipid/propagate.hpp"
#include "dipid/qsys.hpp"

#include <cstdint>
#include <vector>

namespace dipid {

struct SteerConfig {
    // Seed pulses: kappa * amplitude = xi_steer, pi-pulse length pi / (xi_steer |mu'_edge|).
    double xi_steer = 0.05;
    // Zero-order-hold sample spacing 2 pi / (samples_per_period * omega'_max).
    double samples_per_period = 20.0;
    // Refinement stops below this infidelity.
    double infidelity_goal = 1e-11;
    // Anything worse than this is a failure.
    double min_fidelity = 1.0 - 1e-6;
    int max_iterations = 300;
    int max_restarts = 8;
    std::uint64_t seed = 1;
    StepPolicy policy;
};

struct SteerResult {
    ControlWaveform control;  // one sampled segment starting at 0, or empty
    double fidelity = 1.0;    // |<to|U|from>|^2 from an independent propagation
    int iterations = 0;
};

// Sampled control taking from to to, up to global phase.
SteerResult steer(const SystemSpec& spec, const DipoleMatrix& dipole, const QuantumState& from,
                  const QuantumState& to, const SteerConfig& config = {});

// The resonant middle block: amplitude xi / kappa, frequency |omega'_lk|, phase 0 at its start.
ResonantSegment middle_segment(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                               double tau1);

// U(tau2, tau1) (|l> + i|k>) / sqrt 2 under the middle block starting at tau1.
QuantumState psi2_target(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi, double tau1,
                         double tau2, const StepPolicy& policy = {});

struct RamseyConfig {
    SteerConfig steer;
    double xi_max = 0.1;
};

struct DiscriminatingControl {
    LevelPair pair;
    double xi = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double horizon = 0.0;
    ControlWaveform control;
    double fidelity1 = 1.0;  // |<l|U(tau1,0)|i>|^2
    double fidelity2 = 1.0;  // |<f|U(T,tau2)|psi2>|^2
    QuantumState psi1;
    QuantumState psi2;
};

DiscriminatingControl build_discriminating_control(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                   LevelPair pair, double xi, const RamseyConfig& config = {});

// One control per support pair, all padded with zero field to a common horizon.
std::vector<DiscriminatingControl> build_control_set(const SystemSpec& spec, const DipoleMatrix& dipole, double xi,
                                                     const RamseyConfig& config = {});

}  // namespace dipid

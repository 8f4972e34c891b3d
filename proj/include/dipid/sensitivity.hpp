// sensitivity.hpp: first-order derivatives of propagators and of P_if with
// respect to the normalized dipole entries mu'_p, at fixed ||mu||.

#pragma once

#include "dipid/control.hpp"
#include "dipid/propagate.hpp"
#include "dipid/qsys.hpp"

#include <span>
#include <vector>

namespace dipid {

// Entry p is dP_if/dmu'_p, ordered like support_basis().
struct SensitivityVector {
    std::vector<LevelPair> pairs;
    RVector values;
    double population = 0.0;  // P_if at the same control
};

// dU(tau_b, tau_a)/dmu'_lk, where mu'_lk moves the symmetric pair together:
// i kappa U(tau_b,tau_a) int eps(tau) U^dag(tau,tau_a) sigma_x U(tau,tau_a) dtau.
// Computed as the exact derivative of the discrete propagator.
CMatrix du_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control, LevelPair pair,
               double tau_a, double tau_b, const StepPolicy& policy = {});

// Derivatives for every support pair, assembled over the control's segment
// boundaries.
SensitivityVector dp_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                         const StepPolicy& policy = {});

// Same, with an explicit partition 0 = t_0 < ... < t_S = horizon.
SensitivityVector dp_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                         std::span<const double> partition, const StepPolicy& policy = {});

// Sensitivities for arbitrary pairs (on or off the support).
RVector dp_dmu_pairs(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                     std::span<const LevelPair> pairs, const StepPolicy& policy = {});

struct FiniteDifference {
    double value = 0.0;
    // Rounding noise of the difference quotient, steps * eps / h.
    double noise_floor = 0.0;
    bool below_noise_floor = false;
};

// (P(mu' + h sx) - P(mu' - h sx)) / 2h with kappa held fixed. Valid off the support.
FiniteDifference fd_oracle(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                           LevelPair pair, double h, const StepPolicy& policy = {});

}  // namespace dipid

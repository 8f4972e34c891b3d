// propagate.hpp: unitary propagation of i dU/dtau = (H0' - kappa eps(tau) mu') U.
//
// Every step is a product of exact exponentials of real symmetric
// generators, so unitarity holds to rounding regardless of dt. Pieces where
// the field is constant (zero-order-hold samples, free evolution) are
// integrated exactly; resonant pieces use the configured stepper.

#pragma once

#include "dipid/control.hpp"
#include "dipid/qsys.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

namespace dipid {

enum class Stepper {
    // exp(-i dt H(t_mid)); second order.
    ExponentialMidpoint,
    // Two-exponential commutator-free Magnus scheme at Gauss nodes; fourth order.
    Magnus4,
};

struct StepPolicy {
    Stepper stepper = Stepper::Magnus4;
    // dt <= 2 pi / (points_per_period * omega'_max)
    double points_per_period = 20.0;
    // dt <= field_factor / max |kappa eps|
    double field_factor = 0.1;
    // User cap on dt.
    double max_dt = std::numeric_limits<double>::infinity();
    // Failure thresholds: the policy never silently coarsens.
    double min_dt = 1e-9;
    std::size_t max_steps = 200'000'000;

    double resolve_dt(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control) const;
    StepPolicy refined(double factor) const;
};

struct Propagator {
    CMatrix matrix;
    double tau_a = 0.0;
    double tau_b = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<CVector> states;
};

QuantumState evolve_state(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                          const QuantumState& psi0, double tau_a, double tau_b, const StepPolicy& policy = {},
                          Trajectory* trajectory = nullptr, std::size_t stride = 0);

Propagator propagator(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                      double tau_a, double tau_b, const StepPolicy& policy = {});

// Calls observer(tau, U(tau, tau_a)) at tau_a and after every step.
void stream_propagator(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                       double tau_a, double tau_b, const StepPolicy& policy,
                       const std::function<void(double, const CMatrix&)>& observer);

// P_if = |<f|U(T,0)|i>|^2 over the control's full horizon.
double population(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                  const StepPolicy& policy = {});

// Number of steps the policy takes on [tau_a, tau_b].
std::size_t count_steps(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                        double tau_a, double tau_b, const StepPolicy& policy = {});

}  // namespace dipid

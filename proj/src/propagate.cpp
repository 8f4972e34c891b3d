#include "dipid/propagate.hpp"

#include "stepping.hpp"

namespace dipid {

double StepPolicy::resolve_dt(const SystemSpec& spec, const DipoleMatrix& dipole,
                              const ControlWaveform& control) const {
    return detail::resolve_dt(detail::Model(spec, dipole), control, *this);
}

StepPolicy StepPolicy::refined(double factor) const {
    StepPolicy p = *this;
    p.points_per_period *= factor;
    p.field_factor /= factor;
    p.max_dt /= factor;
    return p;
}

QuantumState evolve_state(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                          const QuantumState& psi0, double tau_a, double tau_b, const StepPolicy& policy,
                          Trajectory* trajectory, std::size_t stride) {
    const detail::Model model(spec, dipole);
    if (psi0.dimension() != model.dimension()) throw ValidationError("state dimension mismatch");
    CVector psi = psi0.vector();
    if (trajectory) {
        trajectory->times.assign(1, tau_a);
        trajectory->states.assign(1, psi);
    }
    std::size_t counter = 0;
    detail::for_each_step(model, control, tau_a, tau_b, policy, [&](const detail::Step& step) {
        step.apply(psi);
        ++counter;
        if (trajectory && stride > 0 && (counter % stride == 0 || step.t1 == tau_b)) {
            trajectory->times.push_back(step.t1);
            trajectory->states.push_back(psi);
        }
    });
    // Raw vector: callers measure norm drift directly.
    return QuantumState::from_vector(std::move(psi), 1e-8);
}

Propagator propagator(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                      double tau_a, double tau_b, const StepPolicy& policy) {
    const detail::Model model(spec, dipole);
    CMatrix u = CMatrix::Identity(model.dimension(), model.dimension());
    detail::for_each_step(model, control, tau_a, tau_b, policy, [&](const detail::Step& step) { step.apply(u); });
    return {std::move(u), tau_a, tau_b};
}

void stream_propagator(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                       double tau_a, double tau_b, const StepPolicy& policy,
                       const std::function<void(double, const CMatrix&)>& observer) {
    const detail::Model model(spec, dipole);
    CMatrix u = CMatrix::Identity(model.dimension(), model.dimension());
    observer(tau_a, u);
    detail::for_each_step(model, control, tau_a, tau_b, policy, [&](const detail::Step& step) {
        step.apply(u);
        observer(step.t1, u);
    });
}

double population(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                  const StepPolicy& policy) {
    const detail::Model model(spec, dipole);
    CVector psi = CVector::Zero(model.dimension());
    psi(spec.initial()) = 1.0;
    detail::for_each_step(model, control, 0.0, control.horizon(), policy,
                          [&](const detail::Step& step) { step.apply(psi); });
    return std::norm(psi(spec.measured()));
}

std::size_t count_steps(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                        double tau_a, double tau_b, const StepPolicy& policy) {
    const detail::Model model(spec, dipole);
    detail::check_interval(control, tau_a, tau_b);
    if (tau_a == tau_b) return 0;
    const double dt = detail::resolve_dt(model, control, policy);
    std::size_t total = 0;
    for (const auto& piece : detail::make_pieces(control, tau_a, tau_b)) {
        total += detail::step_nodes(piece, dt).size() - 1;
    }
    return total;
}

}  // namespace dipid

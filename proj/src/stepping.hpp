// stepping.hpp: internal step machinery shared by propagation, sensitivities,
// steering and the averaging checks.

#pragma once

#include "dipid/control.hpp"
#include "dipid/error.hpp"
#include "dipid/propagate.hpp"
#include "dipid/qsys.hpp"

#include <array>
#include <cmath>
#include <variant>
#include <vector>

namespace dipid::detail {

// H(tau) = diag(h0) - kappa * eps(tau) * mu
struct Model {
    RVector h0;
    RMatrix mu;
    double kappa = 1.0;

    Model(const SystemSpec& spec, const DipoleMatrix& dipole);
    Model(RVector h0_, RMatrix mu_, double kappa_) : h0(std::move(h0_)), mu(std::move(mu_)), kappa(kappa_) {}

    int dimension() const noexcept { return static_cast<int>(h0.size()); }
};

// F = exp(-i h G) with G = weight * H0 - kappa * field * mu (real symmetric).
struct ExpFactor {
    double h = 0.0;
    double weight = 1.0;
    double field = 0.0;
    bool diagonal = false;  // field == 0: G is diagonal, eigenvectors are the identity
    RVector lambda;
    RMatrix vecs;
    CMatrix u;

    // dF for a variation dG of the generator (Daleckii-Krein).
    CMatrix derivative(const RMatrix& dG) const;
};

ExpFactor make_factor(const Model& model, double h, double weight, double field);

// One step: factors applied in order factors[0], factors[1].
struct Step {
    std::array<const ExpFactor*, 2> factors{nullptr, nullptr};
    int count = 0;
    double t0 = 0.0;
    double t1 = 0.0;

    CMatrix unitary() const;
    void apply(CVector& v) const;
    void apply(CMatrix& m) const;
    // dS for generator variation dG_j = -kappa * field_j * direction.
    CMatrix field_weighted_derivative(const RMatrix& direction, double kappa) const;
};

// A stretch of [tau_a, tau_b] on which the field has one analytic form.
struct Piece {
    double a = 0.0;
    double b = 0.0;
    std::variant<double, ResonantSegment> field;  // constant value or resonant cosine
};

std::vector<Piece> make_pieces(const ControlWaveform& control, double tau_a, double tau_b);

double resolve_dt(const Model& model, const ControlWaveform& control, const StepPolicy& policy);

inline int steps_for(double length, double dt) {
    const double n = std::ceil(length / dt - 1e-9);
    return n < 1.0 ? 1 : static_cast<int>(n);
}

// Step boundaries inside a piece. Resonant pieces follow their segment's own
// uniform grid, so propagating a sub-interval reuses the steps of the whole run.
std::vector<double> step_nodes(const Piece& piece, double dt);

void check_interval(const ControlWaveform& control, double tau_a, double tau_b);

// Calls f(const Step&) for every step on [tau_a, tau_b].
template <typename F>
std::size_t for_each_step(const Model& model, const ControlWaveform& control, double tau_a, double tau_b,
                          const StepPolicy& policy, F&& f) {
    check_interval(control, tau_a, tau_b);
    if (tau_b == tau_a) return 0;
    const double dt = resolve_dt(model, control, policy);

    const auto pieces = make_pieces(control, tau_a, tau_b);
    std::vector<std::vector<double>> nodes;
    nodes.reserve(pieces.size());
    std::size_t total = 0;
    for (const auto& piece : pieces) {
        nodes.push_back(step_nodes(piece, dt));
        total += nodes.back().size() - 1;
        if (total > policy.max_steps) {
            throw PropagationError("step budget exceeded (" + std::to_string(policy.max_steps) + " steps)");
        }
    }

    for (std::size_t p = 0; p < pieces.size(); ++p) {
        const auto& piece = pieces[p];
        const auto& t = nodes[p];
        const std::size_t n = t.size() - 1;

        if (const double* value = std::get_if<double>(&piece.field)) {
            const double h = (piece.b - piece.a) / static_cast<double>(n);
            if (!(h >= policy.min_dt) && piece.b - piece.a >= policy.min_dt) {
                throw PropagationError("required dt underflows the minimum step");
            }
            const ExpFactor factor = make_factor(model, h, 1.0, *value);
            for (std::size_t s = 0; s < n; ++s) {
                Step step;
                step.factors[0] = &factor;
                step.count = 1;
                step.t0 = t[s];
                step.t1 = t[s + 1];
                f(static_cast<const Step&>(step));
            }
            continue;
        }

        const auto& res = std::get<ResonantSegment>(piece.field);
        for (std::size_t s = 0; s < n; ++s) {
            const double t0 = t[s];
            const double h = t[s + 1] - t0;
            Step step;
            step.t0 = t0;
            step.t1 = t[s + 1];
            if (policy.stepper == Stepper::ExponentialMidpoint) {
                const ExpFactor f0 = make_factor(model, h, 1.0, res.field(t0 + 0.5 * h));
                step.factors[0] = &f0;
                step.count = 1;
                f(static_cast<const Step&>(step));
            } else {
                // Gauss nodes c1,2 = 1/2 -+ sqrt(3)/6; weights (3 +- 2 sqrt(3))/12.
                constexpr double kSqrt3 = 1.7320508075688772;
                const double e1 = res.field(t0 + (0.5 - kSqrt3 / 6.0) * h);
                const double e2 = res.field(t0 + (0.5 + kSqrt3 / 6.0) * h);
                constexpr double a = (3.0 + 2.0 * kSqrt3) / 12.0;
                constexpr double b = (3.0 - 2.0 * kSqrt3) / 12.0;
                const ExpFactor f0 = make_factor(model, h, 0.5, a * e1 + b * e2);
                const ExpFactor f1 = make_factor(model, h, 0.5, b * e1 + a * e2);
                step.factors = {&f0, &f1};
                step.count = 2;
                f(static_cast<const Step&>(step));
            }
        }
    }
    return total;
}

}  // namespace dipid::detail

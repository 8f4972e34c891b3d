#include "dipid/ramsey.hpp"

#include "dipid/error.hpp"
#include "stepping.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dipid {

namespace {

using Samples = std::vector<double>;

int dominant_level(const CVector& v, int skip = -1) {
    int best = -1;
    for (int j = 0; j < v.size(); ++j) {
        if (j == skip) continue;
        if (best < 0 || std::abs(v(j)) > std::abs(v(best))) best = j;
    }
    return best;
}

// Samples of A cos(omega (t - t0) + phase) at sample centers.
void append_pulse(Samples& out, double dt, double amplitude, double omega, double duration, double phase) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / dt)));
    for (std::size_t j = 0; j < n; ++j) {
        const double t = (static_cast<double>(j) + 0.5) * dt;
        out.push_back(amplitude * std::cos(omega * t + phase));
    }
}

struct Steerer {
    const SystemSpec& spec;
    const DipoleMatrix& dipole;
    const detail::Model model;
    const SteerConfig& config;
    const CVector from;
    const CVector to;
    double dt = 0.0;

    Steerer(const SystemSpec& s, const DipoleMatrix& d, const CVector& a, const CVector& b, const SteerConfig& c)
        : spec(s), dipole(d), model(s, d), config(c), from(a), to(b) {
        dt = 2.0 * std::numbers::pi / (config.samples_per_period * spec.max_transition_frequency());
    }

    double amplitude() const { return config.xi_steer / model.kappa; }

    double pulse_length(LevelPair edge, double angle) const {
        return angle / (config.xi_steer * std::abs(model.mu(edge.l, edge.k)));
    }

    double omega(LevelPair edge) const { return std::abs(model.h0(edge.l) - model.h0(edge.k)); }

    void append_chain(Samples& out, int a, int b) const {
        const auto path = shortest_coupling_path(dipole, a, b);
        for (const auto& edge : *path) {
            append_pulse(out, dt, amplitude(), omega(edge), pulse_length(edge, std::numbers::pi), 0.0);
        }
    }

    std::vector<Samples> seeds() const {
        std::vector<Samples> out;
        const int a = dominant_level(from);
        const int b = dominant_level(to);
        const bool pure = std::norm(from(a)) > 1.0 - 1e-6;
        const int a2 = dominant_level(from, a);
        const bool split = !pure && std::abs(model.mu(a, a2)) > 0.0;

        if (!split) {
            Samples s;
            append_chain(s, a, b);
            if (!s.empty()) out.push_back(std::move(s));
        }
        // Half pulses on an edge touching the source, with four drive phases,
        // followed by a chain from either end of that edge.
        int partner = split ? a2 : -1;
        if (partner < 0) {
            for (int j = 0; j < model.dimension() && partner < 0; ++j) {
                if (j != a && model.mu(a, j) != 0.0) partner = j;
            }
        }
        const LevelPair edge{a, partner};
        for (int end : {a, partner}) {
            for (int q = 0; q < 4; ++q) {
                Samples s;
                append_pulse(s, dt, amplitude(), omega(edge), pulse_length(edge, 0.5 * std::numbers::pi),
                             0.5 * std::numbers::pi * q);
                append_chain(s, end, b);
                out.push_back(std::move(s));
            }
        }
        return out;
    }

    std::vector<detail::ExpFactor> factors(const Samples& c) const {
        std::vector<detail::ExpFactor> f;
        f.reserve(c.size());
        for (double v : c) f.push_back(detail::make_factor(model, dt, 1.0, v));
        return f;
    }

    CVector final_state(const std::vector<detail::ExpFactor>& f) const {
        CVector psi = from;
        for (const auto& x : f) psi = x.u * psi;
        return psi;
    }

    CVector residual(const CVector& psi) const { return psi - to.dot(psi) * to; }

    double infidelity(const Samples& c) const { return residual(final_state(factors(c))).squaredNorm(); }

    // Levenberg-Marquardt on r = (I - |to><to|) U psi_from over the samples,
    // in the underdetermined (dual) form.
    double refine(Samples& c, int& iterations) const {
        const int n = model.dimension();
        const auto k = static_cast<Eigen::Index>(c.size());
        const RMatrix dgen = -model.kappa * model.mu;
        double lambda = -1.0;
        auto f = factors(c);
        CVector psi = final_state(f);
        double cost = residual(psi).squaredNorm();

        for (int it = 0; it < config.max_iterations && cost > config.infidelity_goal; ++it) {
            ++iterations;
            std::vector<CVector> before(c.size());
            CVector state = from;
            for (std::size_t j = 0; j < c.size(); ++j) {
                before[j] = state;
                state = f[j].u * state;
            }
            RMatrix jac(2 * n, k);
            CMatrix after = CMatrix::Identity(n, n);
            for (Eigen::Index j = k - 1; j >= 0; --j) {
                const auto idx = static_cast<std::size_t>(j);
                const CVector col = after * (f[idx].derivative(dgen) * before[idx]);
                const CVector proj = col - to.dot(col) * to;
                jac.col(j).head(n) = proj.real();
                jac.col(j).tail(n) = proj.imag();
                after = after * f[idx].u;
            }
            const CVector r = residual(psi);
            RVector rr(2 * n);
            rr.head(n) = r.real();
            rr.tail(n) = r.imag();
            const RMatrix jjt = jac * jac.transpose();
            if (lambda < 0.0) lambda = 1e-3 * std::max(jjt.diagonal().maxCoeff(), 1e-12);

            bool accepted = false;
            for (int tries = 0; tries < 30 && !accepted; ++tries) {
                RMatrix a = jjt;
                a.diagonal().array() += lambda;
                const RVector y = a.ldlt().solve(rr);
                const RVector delta = -jac.transpose() * y;
                Samples trial = c;
                for (Eigen::Index j = 0; j < k; ++j) trial[static_cast<std::size_t>(j)] += delta(j);
                auto tf = factors(trial);
                const CVector tpsi = final_state(tf);
                const double tcost = residual(tpsi).squaredNorm();
                if (std::isfinite(tcost) && tcost < cost) {
                    c = std::move(trial);
                    f = std::move(tf);
                    psi = tpsi;
                    cost = tcost;
                    lambda = std::max(lambda / 3.0, 1e-14);
                    accepted = true;
                } else {
                    lambda *= 4.0;
                }
            }
            if (!accepted) break;
        }
        return cost;
    }
};

}  // namespace

SteerResult steer(const SystemSpec& spec, const DipoleMatrix& dipole, const QuantumState& from,
                  const QuantumState& to, const SteerConfig& config) {
    const int n = spec.dimension();
    if (from.dimension() != n || to.dimension() != n || dipole.dimension() != n) {
        throw ValidationError("steering states and dipole must match the system dimension");
    }
    const double overlap = std::norm(to.vector().dot(from.vector()));
    if (overlap >= 1.0 - 1e-14) return {ControlWaveform::zero(0.0), overlap, 0};

    if (!coupling_graph_connected(dipole)) {
        throw UncontrollableError("coupling graph is not connected; some levels cannot be reached");
    }
    if (!validate_system(spec).ok()) {
        throw UncontrollableError("transition frequencies are degenerate; resonant steering is not selective");
    }

    const Steerer s(spec, dipole, from.vector(), to.vector(), config);
    auto candidates = s.seeds();
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t j = 0; j < candidates.size(); ++j) order.emplace_back(s.infidelity(candidates[j]), j);
    std::sort(order.begin(), order.end());

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> jitter(0.0, 0.2 * s.amplitude());
    double best = 0.0;
    int iterations = 0;
    for (int attempt = 0; attempt < config.max_restarts; ++attempt) {
        const auto pick = static_cast<std::size_t>(attempt) % order.size();
        Samples c = candidates[order[pick].second];
        if (attempt >= static_cast<int>(order.size())) {
            for (double& v : c) v += jitter(rng);
        }
        s.refine(c, iterations);

        ControlWaveform control(static_cast<double>(c.size()) * s.dt, {SampledSegment{0.0, s.dt, c}});
        const auto out = evolve_state(spec, dipole, control, from, 0.0, control.horizon(), config.policy);
        const double fidelity = std::norm(to.vector().dot(out.vector()));
        best = std::max(best, fidelity);
        if (fidelity >= config.min_fidelity) return {std::move(control), fidelity, iterations};
    }
    throw SteeringError("steering stalled at fidelity " + std::to_string(best), best);
}

ResonantSegment middle_segment(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                               double tau1) {
    const double kappa = coupling_ratio(spec, dipole);
    return ResonantSegment{tau1, 1.0 / (xi * xi), xi / kappa, std::abs(transition_frequency(spec, pair.l, pair.k))};
}

QuantumState psi2_target(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi, double tau1,
                         double tau2, const StepPolicy& policy) {
    if (!(xi > 0.0)) throw ValidationError("xi must be positive");
    const int n = spec.dimension();
    if (pair.l == pair.k || pair.l < 0 || pair.k < 0 || pair.l >= n || pair.k >= n) {
        throw ValidationError("invalid level pair " + pair.label());
    }
    auto seg = middle_segment(spec, dipole, pair, xi, tau1);
    seg.duration = tau2 - tau1;
    CVector v = CVector::Zero(n);
    v(pair.l) = 1.0 / std::numbers::sqrt2;
    v(pair.k) = kI / std::numbers::sqrt2;
    const ControlWaveform control(tau2, {seg});
    return evolve_state(spec, dipole, control, QuantumState::from_vector(v), tau1, tau2, policy);
}

DiscriminatingControl build_discriminating_control(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                   LevelPair pair, double xi, const RamseyConfig& config) {
    if (!dipole.support_index(pair)) {
        throw ValidationError("pair " + pair.label() + " is not in the dipole support");
    }
    if (!(xi > 0.0) || xi > config.xi_max) {
        throw ValidationError("xi = " + std::to_string(xi) + " outside (0, " + std::to_string(config.xi_max) + "]");
    }
    const int n = spec.dimension();
    const auto& policy = config.steer.policy;

    const auto psi1 = QuantumState::basis(n, pair.l);
    const auto first = steer(spec, dipole, QuantumState::basis(n, spec.initial()), psi1, config.steer);
    const double tau1 = first.control.horizon();
    const auto middle = middle_segment(spec, dipole, pair, xi, 0.0);
    const double tau2 = tau1 + middle.duration;
    const auto psi2 = psi2_target(spec, dipole, pair, xi, tau1, tau2, policy);
    const auto second = steer(spec, dipole, psi2, QuantumState::basis(n, spec.measured()), config.steer);

    const ControlWaveform control =
        first.control.then(ControlWaveform(middle.duration, {middle})).then(second.control);

    DiscriminatingControl out{pair, xi, tau1, tau2, control.horizon(), control, 0.0, 0.0, psi1, psi2};
    const auto at1 = evolve_state(spec, dipole, control, QuantumState::basis(n, spec.initial()), 0.0, tau1, policy);
    out.fidelity1 = std::norm(at1.vector()(pair.l));
    const auto at_end = evolve_state(spec, dipole, control, psi2, tau2, control.horizon(), policy);
    out.fidelity2 = std::norm(at_end.vector()(spec.measured()));
    const double worst = std::min(out.fidelity1, out.fidelity2);
    if (worst < config.steer.min_fidelity) {
        throw SteeringError("assembled control for pair " + pair.label() + " has steering fidelity " +
                                std::to_string(worst),
                            worst);
    }
    return out;
}

std::vector<DiscriminatingControl> build_control_set(const SystemSpec& spec, const DipoleMatrix& dipole, double xi,
                                                     const RamseyConfig& config) {
    std::vector<DiscriminatingControl> out;
    double horizon = 0.0;
    for (const auto& pair : dipole.support()) {
        try {
            out.push_back(build_discriminating_control(spec, dipole, pair, xi, config));
        } catch (const SteeringError& e) {
            throw SteeringError("control set aborted at pair " + pair.label() + ": " + e.what(), e.best_fidelity());
        }
        horizon = std::max(horizon, out.back().horizon);
    }
    for (auto& c : out) {
        c.control = c.control.padded_to(horizon);
        c.horizon = horizon;
    }
    return out;
}

}  // namespace dipid

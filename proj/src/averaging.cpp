#include "dipid/averaging.hpp"

#include "dipid/control.hpp"
#include "dipid/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>

namespace dipid {

namespace {

void check_pair(const SystemSpec& spec, LevelPair pair) {
    const int n = spec.dimension();
    if (pair.l == pair.k || pair.l < 0 || pair.k < 0 || pair.l >= n || pair.k >= n) {
        throw ValidationError("invalid level pair " + pair.label());
    }
}

double spectral_norm(const CMatrix& a) {
    return Eigen::JacobiSVD<CMatrix>(a).singularValues()(0);
}

// exp(i s B) for Hermitian B, from one eigendecomposition.
struct HermitianExp {
    Eigen::SelfAdjointEigenSolver<CMatrix> eig;

    explicit HermitianExp(const CMatrix& b) : eig(b) {}

    CMatrix operator()(double s) const {
        const CVector phases = (kI * s * eig.eigenvalues().cast<Complex>()).array().exp();
        return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
    }
};

CMatrix slow_generator(const DipoleMatrix& dipole, const SecularCorrection& k, double xi) {
    const int n = dipole.dimension();
    const double mu_lk = dipole.normalized()(k.pair.l, k.pair.k);
    return (0.5 * xi * mu_lk) * sigma_x(n, k.pair) + (xi * xi) * k.k;
}

}  // namespace

std::vector<OscillatingTerm> interaction_components(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                    LevelPair pair) {
    check_pair(spec, pair);
    const auto report = validate_system(spec);
    if (!report.ok()) throw ValidationError("degenerate transition frequencies: averaging terms are not separated");
    const int n = spec.dimension();
    const RMatrix& mu = dipole.normalized();
    const double w = std::abs(transition_frequency(spec, pair.l, pair.k));

    std::vector<OscillatingTerm> out;
    for (int m = 0; m < n; ++m) {
        for (int q = 0; q < n; ++q) {
            if (m == q || mu(m, q) == 0.0) continue;
            const double w_mq = transition_frequency(spec, m, q);
            for (double sign : {1.0, -1.0}) {
                const double omega = w_mq + sign * w;
                const bool secular = (LevelPair{m, q}.same_levels(pair)) && std::abs(omega) < 0.5 * w;
                if (secular) continue;
                OscillatingTerm t;
                t.frequency = omega;
                t.matrix = CMatrix::Zero(n, n);
                t.matrix(m, q) = 0.5 * mu(m, q);
                t.source = {m, q};
                out.push_back(std::move(t));
            }
        }
    }
    return out;
}

SecularCorrection k_matrix(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair) {
    const auto terms = interaction_components(spec, dipole, pair);
    const int n = spec.dimension();
    constexpr double kMatch = 1e-9;
    CMatrix k = CMatrix::Zero(n, n);
    for (const auto& a : terms) {
        bool matched = false;
        for (const auto& b : terms) {
            if (std::abs(a.frequency + b.frequency) > kMatch) continue;
            matched = true;
            k += -kI * (a.matrix * b.matrix) / (kI * a.frequency);
        }
        if (!matched) {
            throw ConsistencyError("oscillating term at frequency " + std::to_string(a.frequency) +
                                   " has no conjugate partner");
        }
    }
    return {pair, k};
}

AveragedPropagator u_averaged(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                              double tau1, double tau) {
    return u_averaged(spec, dipole, k_matrix(spec, dipole, pair), xi, tau1, tau);
}

AveragedPropagator u_averaged(const SystemSpec& spec, const DipoleMatrix& dipole, const SecularCorrection& k,
                              double xi, double tau1, double tau) {
    if (!(xi > 0.0)) throw ValidationError("xi must be positive");
    if (tau < tau1) throw ValidationError("averaged propagator needs tau >= tau1");
    const double s = tau - tau1;
    const RVector& e = spec.normalized_energies();
    const CVector free = (-kI * s * e.cast<Complex>()).array().exp();
    AveragedPropagator out;
    out.matrix = free.asDiagonal() * HermitianExp(slow_generator(dipole, k, xi))(s);
    out.within_window = s <= 1.0 / (xi * xi) * (1.0 + 1e-12);
    return out;
}

double conjugation_check(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                         std::span<const double> taus) {
    return conjugation_check(spec, dipole, k_matrix(spec, dipole, pair), xi, taus);
}

double conjugation_check(const SystemSpec& spec, const DipoleMatrix& dipole, const SecularCorrection& k, double xi,
                         std::span<const double> taus) {
    check_pair(spec, k.pair);
    if (dipole.normalized()(k.pair.l, k.pair.k) == 0.0) throw ValidationError("mu'_lk must be nonzero");
    const CMatrix sx = sigma_x(spec.dimension(), k.pair);
    const HermitianExp exp_b(slow_generator(dipole, k, xi));
    double worst = 0.0;
    for (double tau : taus) {
        const CMatrix u = exp_b(-tau);
        worst = std::max(worst, spectral_norm(u * sx * u.adjoint() - sx));
    }
    return worst;
}

AveragingError averaging_error(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                               const StepPolicy& policy) {
    const auto k = k_matrix(spec, dipole, pair);
    const ResonantSegment seg{0.0, 1.0 / (xi * xi), xi / coupling_ratio(spec, dipole),
                              std::abs(transition_frequency(spec, pair.l, pair.k))};
    const ControlWaveform control(seg.duration, {seg});
    const HermitianExp exp_b(slow_generator(dipole, k, xi));
    const CVector e = spec.normalized_energies().cast<Complex>();

    AveragingError out;
    stream_propagator(spec, dipole, control, 0.0, seg.duration, policy, [&](double tau, const CMatrix& u) {
        const CVector free = (-kI * tau * e).array().exp();
        const double err = spectral_norm(u - free.asDiagonal() * exp_b(tau));
        ++out.samples;
        if (err > out.sup_error) {
            out.sup_error = err;
            out.at_tau = tau;
        }
    });
    return out;
}

CMatrix rotated_sigma_x(const SystemSpec& spec, LevelPair pair, double tau) {
    check_pair(spec, pair);
    const CVector e = spec.normalized_energies().cast<Complex>();
    const CVector forward = (kI * tau * e).array().exp();
    const CVector back = (-kI * tau * e).array().exp();
    const double w = transition_frequency(spec, pair.l, pair.k);
    return std::cos(w * tau) * (forward.asDiagonal() * sigma_x(spec.dimension(), pair) * back.asDiagonal());
}

CMatrix rotated_sigma_x_closed_form(const SystemSpec& spec, LevelPair pair, double tau) {
    check_pair(spec, pair);
    const int n = spec.dimension();
    const double w = transition_frequency(spec, pair.l, pair.k);
    return (0.5 + 0.5 * std::cos(2.0 * w * tau)) * sigma_x(n, pair) - 0.5 * std::sin(2.0 * w * tau) * sigma_y(n, pair);
}

}  // namespace dipid

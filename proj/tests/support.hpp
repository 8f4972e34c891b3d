// support.hpp: shared fixtures and independent oracles for the test suites.
//
// Nothing here calls into the library's stepping code: the oracle integrator
// is a plain fixed-step RK4 on the Schrodinger equation.

#pragma once

#include "dipid/control.hpp"
#include "dipid/linalg.hpp"
#include "dipid/qsys.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <variant>
#include <vector>

namespace dipid::fixtures {

inline SystemSpec two_level_spec(int i = 0, int f = 1) {
    return SystemSpec::create({0.0, 1.0}, i, f);
}

inline DipoleMatrix two_level_dipole() {
    RMatrix mu(2, 2);
    mu << 0.0, 1.0, 1.0, 0.0;
    return DipoleMatrix::from_matrix(mu);
}

// Normalized energies (0, 0.4, 1): transitions 0.4, 0.6, 1.0.
inline SystemSpec three_level_spec(int i = 0, int f = 2) {
    return SystemSpec::create({0.0, 1.0, 2.5}, i, f);
}

inline DipoleMatrix ladder_dipole() {
    RMatrix mu(3, 3);
    mu << 0.0, 1.0, 0.0,
          1.0, 0.0, 0.8,
          0.0, 0.8, 0.0;
    return DipoleMatrix::from_matrix(mu);
}

inline DipoleMatrix full3_dipole() {
    RMatrix mu(3, 3);
    mu << 0.0, 1.0, 0.6,
          1.0, 0.0, 0.8,
          0.6, 0.8, 0.0;
    return DipoleMatrix::from_matrix(mu);
}

// Gaps 1, 2.5, 4.7, 1.5, 3.7, 2.2 are pairwise distinct.
inline SystemSpec four_level_spec(int i = 0, int f = 3) {
    return SystemSpec::create({0.0, 1.0, 2.5, 4.7}, i, f);
}

inline DipoleMatrix full4_dipole() {
    RMatrix mu(4, 4);
    mu << 0.0, 1.0, 0.5, 0.3,
          1.0, 0.0, 0.7, 0.4,
          0.5, 0.7, 0.0, 0.9,
          0.3, 0.4, 0.9, 0.0;
    return DipoleMatrix::from_matrix(mu);
}

// Bounded random control: a sampled block, a gap, and a resonant block.
inline ControlWaveform random_control(std::mt19937_64& rng, const SystemSpec& spec, double amplitude = 0.6) {
    std::uniform_real_distribution<double> amp(-amplitude, amplitude);
    std::uniform_int_distribution<int> count(10, 40);
    std::uniform_int_distribution<int> level(0, spec.dimension() - 1);

    SampledSegment s;
    s.start = 0.5;
    s.dt = 0.37;
    s.amplitudes.resize(static_cast<std::size_t>(count(rng)));
    for (double& a : s.amplitudes) a = amp(rng);

    int m = level(rng);
    int n = level(rng);
    while (n == m) n = level(rng);
    ResonantSegment r;
    r.start = s.end() + 1.3;
    r.duration = 7.5;
    r.amplitude = amp(rng);
    r.frequency = std::abs(spec.normalized_energy(m) - spec.normalized_energy(n));

    return ControlWaveform(r.end() + 0.8, {s, r});
}

// Fixed-step RK4 on dpsi/dtau = -i (H0' - kappa eps mu') psi, restarted at
// every point where the field is discontinuous.
inline CVector rk4_evolve(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                          CVector psi, double tau_a, double tau_b, double h) {
    const RVector e = spec.normalized_energies();
    const RMatrix mu = dipole.normalized();
    const double kappa = dipole.scale() / spec.energy_scale();

    std::vector<double> cuts{tau_a, tau_b};
    for (const auto& seg : control.segments()) {
        if (const auto* s = std::get_if<SampledSegment>(&seg)) {
            for (std::size_t j = 0; j <= s->amplitudes.size(); ++j) cuts.push_back(s->start + j * s->dt);
        } else {
            cuts.push_back(segment_start(seg));
            cuts.push_back(segment_end(seg));
        }
    }
    std::sort(cuts.begin(), cuts.end());

    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        const double a = std::max(cuts[c], tau_a);
        const double b = std::min(cuts[c + 1], tau_b);
        if (b - a <= 1e-13) continue;
        // Field is sampled strictly inside the piece so ZOH jumps are respected.
        const double lo = a + 1e-12 * (b - a);
        const double hi = b - 1e-12 * (b - a);
        auto rhs = [&](double t, const CVector& y) -> CVector {
            const double field = control.field(std::clamp(t, lo, hi));
            CVector out(y.size());
            for (int i = 0; i < y.size(); ++i) out(i) = e(i) * y(i);
            out -= (kappa * field) * (mu.cast<Complex>() * y);
            return -kI * out;
        };
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / h)));
        const double dt = (b - a) / n;
        for (int s = 0; s < n; ++s) {
            const double t = a + s * dt;
            const CVector k1 = rhs(t, psi);
            const CVector k2 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k1);
            const CVector k3 = rhs(t + 0.5 * dt, psi + 0.5 * dt * k2);
            const CVector k4 = rhs(t + dt, psi + dt * k3);
            psi += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }
    return psi;
}

inline double rk4_population(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                             double h) {
    CVector psi = CVector::Zero(spec.dimension());
    psi(spec.initial()) = 1.0;
    psi = rk4_evolve(spec, dipole, control, psi, 0.0, control.horizon(), h);
    return std::norm(psi(spec.measured()));
}

// Brute-force time average of H_I dH_I/dtau. dH_I/dtau is assembled directly
// from the rotated dipole, H_I by cumulative trapezoid minus its mean.
inline CMatrix k_time_average(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair) {
    const int n = spec.dimension();
    const RVector e = spec.normalized_energies();
    const CMatrix mu = dipole.normalized().cast<Complex>();
    const double w = std::abs(e(pair.l) - e(pair.k));
    const double mu_lk = dipole.normalized()(pair.l, pair.k);
    CMatrix secular = CMatrix::Zero(n, n);
    secular(pair.l, pair.k) = secular(pair.k, pair.l) = 0.5 * mu_lk;

    // Frequency range by brute force over all level gaps.
    double lo = 1e300;
    double hi = 0.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            if (a == b || dipole.normalized()(a, b) == 0.0) continue;
            for (double s : {1.0, -1.0}) {
                const double f = std::abs(e(a) - e(b) + s * w);
                if (f > 1e-9) lo = std::min(lo, f);
                hi = std::max(hi, f);
            }
        }
    }
    const double theta = 1e5 / lo;
    const double h = 2.0 * std::numbers::pi / (100.0 * hi);
    const auto steps = static_cast<long>(std::ceil(theta / h));
    const double dt = theta / static_cast<double>(steps);

    auto hdot = [&](double t) {
        CMatrix m(n, n);
        for (int a = 0; a < n; ++a) {
            for (int b = 0; b < n; ++b) m(a, b) = mu(a, b) * std::exp(kI * (e(a) - e(b)) * t);
        }
        return CMatrix(std::cos(w * t) * m - secular);
    };

    CMatrix y = CMatrix::Zero(n, n);
    CMatrix prev = hdot(0.0);
    CMatrix sum_yd = CMatrix::Zero(n, n);
    CMatrix sum_y = CMatrix::Zero(n, n);
    CMatrix sum_d = CMatrix::Zero(n, n);
    for (long s = 1; s <= steps; ++s) {
        const CMatrix cur = hdot(s * dt);
        y += 0.5 * dt * (prev + cur);
        sum_yd += y * cur;
        sum_y += y;
        sum_d += cur;
        prev = cur;
    }
    const double count = static_cast<double>(steps);
    const CMatrix avg = sum_yd / count - (sum_y / count) * (sum_d / count);
    return -kI * avg;
}

}  // namespace dipid::fixtures


// averaging.hpp: interaction-frame bookkeeping for a resonant drive on (l,k),
// the secular correction K and the averaged propagator
//   U(tau, tau1) ~ exp(-i H0' s) exp(i (xi mu'_lk/2 sigma_x + xi^2 K) s),  s = tau - tau1.

#pragma once

#include "dipid/propagate.hpp"
#include "dipid/qsys.hpp"

#include <span>
#include <vector>

namespace dipid {

// A e^{i Omega tau}, one term of dH_I/dtau.
struct OscillatingTerm {
    double frequency = 0.0;
    CMatrix matrix;
    LevelPair source;  // (m,n) entry of mu' it came from
};

// Terms 1/2 mu'_mn |m><n| at omega'_mn + omega'_lk and omega'_mn - omega'_lk for
// every ordered (m,n) with mu'_mn != 0, minus the two zero-frequency terms that
// make up the retained (mu'_lk/2) sigma_x. Throws on a degenerate spectrum.
std::vector<OscillatingTerm> interaction_components(const SystemSpec& spec, const DipoleMatrix& dipole,
                                                    LevelPair pair);

struct SecularCorrection {
    LevelPair pair;
    CMatrix k;
};

// K = -i sum_{Omega_j + Omega_j' = 0} A_j A_j' / (i Omega_j).
SecularCorrection k_matrix(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair);

struct AveragedPropagator {
    CMatrix matrix;
    bool within_window = true;  // tau - tau1 <= 1/xi^2
};

AveragedPropagator u_averaged(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                              double tau1, double tau);

// Same with a precomputed (or replaced) K.
AveragedPropagator u_averaged(const SystemSpec& spec, const DipoleMatrix& dipole, const SecularCorrection& k,
                              double xi, double tau1, double tau);

// max over taus of || e^{-iB tau} sigma_x e^{iB tau} - sigma_x ||_2,
// B = xi mu'_lk/2 sigma_x + xi^2 K.
double conjugation_check(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                         std::span<const double> taus);
double conjugation_check(const SystemSpec& spec, const DipoleMatrix& dipole, const SecularCorrection& k, double xi,
                         std::span<const double> taus);

struct AveragingError {
    double sup_error = 0.0;  // max_tau || U_full - U_avg ||_2
    double at_tau = 0.0;     // offset from the segment start
    std::size_t samples = 0;
};

// Full propagator of the bare resonant block against the averaged form over [0, 1/xi^2].
AveragingError averaging_error(const SystemSpec& spec, const DipoleMatrix& dipole, LevelPair pair, double xi,
                               const StepPolicy& policy = {});

// cos(omega'_lk tau) e^{iH0' tau} sigma_x e^{-iH0' tau}, built from matrix products.
CMatrix rotated_sigma_x(const SystemSpec& spec, LevelPair pair, double tau);

// The same operator as 1/2 sx + 1/2 cos(2 w tau) sx - 1/2 sin(2 w tau) sy, w = omega'_lk.
CMatrix rotated_sigma_x_closed_form(const SystemSpec& spec, LevelPair pair, double tau);

}  // namespace dipid

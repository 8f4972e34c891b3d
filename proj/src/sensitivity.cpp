#include "dipid/sensitivity.hpp"

#include "stepping.hpp"

#include <cmath>
#include <limits>

namespace dipid {

namespace {

void check_pair(const DipoleMatrix& dipole, LevelPair pair) {
    const int n = dipole.dimension();
    if (pair.l < 0 || pair.k < 0 || pair.l >= n || pair.k >= n || pair.l == pair.k) {
        throw ValidationError("pair " + pair.label() + " is not a transition of a " + std::to_string(n) + "-level system");
    }
}

// Forward pass over [tau_a, tau_b]: psi <- S psi, d_p <- S d_p + dS_p psi.
void accumulate(const detail::Model& model, const ControlWaveform& control, double tau_a, double tau_b,
                const StepPolicy& policy, const std::vector<RMatrix>& directions, CVector& psi,
                std::vector<CVector>& d) {
    detail::for_each_step(model, control, tau_a, tau_b, policy, [&](const detail::Step& step) {
        const bool driven = step.factors[0]->field != 0.0 || (step.count == 2 && step.factors[1]->field != 0.0);
        for (std::size_t p = 0; p < directions.size(); ++p) {
            step.apply(d[p]);
            if (driven) d[p] += step.field_weighted_derivative(directions[p], model.kappa) * psi;
        }
        step.apply(psi);
    });
}

std::vector<double> clean_partition(std::span<const double> partition, double horizon) {
    if (partition.size() < 2) throw ValidationError("partition needs at least two points");
    constexpr double kSlack = 1e-9;
    if (std::abs(partition.front()) > kSlack || std::abs(partition.back() - horizon) > kSlack) {
        throw ValidationError("partition must start at 0 and end at the horizon");
    }
    std::vector<double> out{0.0};
    for (std::size_t j = 1; j < partition.size(); ++j) {
        if (partition[j] < partition[j - 1]) throw ValidationError("partition must be nondecreasing");
        if (partition[j] - out.back() > 1e-12) out.push_back(partition[j]);
    }
    out.back() = horizon;
    return out;
}

}  // namespace

CMatrix du_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control, LevelPair pair,
               double tau_a, double tau_b, const StepPolicy& policy) {
    check_pair(dipole, pair);
    const detail::Model model(spec, dipole);
    const int n = model.dimension();
    const RMatrix direction = sigma_x_real(n, pair);
    CMatrix u = CMatrix::Identity(n, n);
    CMatrix du = CMatrix::Zero(n, n);
    detail::for_each_step(model, control, tau_a, tau_b, policy, [&](const detail::Step& step) {
        step.apply(du);
        du += step.field_weighted_derivative(direction, model.kappa) * u;
        step.apply(u);
    });
    return du;
}

RVector dp_dmu_pairs(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                     std::span<const LevelPair> pairs, const StepPolicy& policy) {
    const detail::Model model(spec, dipole);
    const int n = model.dimension();
    std::vector<RMatrix> directions;
    for (const auto& pair : pairs) {
        check_pair(dipole, pair);
        directions.push_back(sigma_x_real(n, pair));
    }
    CVector psi = CVector::Zero(n);
    psi(spec.initial()) = 1.0;
    std::vector<CVector> d(pairs.size(), CVector::Zero(n));
    accumulate(model, control, 0.0, control.horizon(), policy, directions, psi, d);
    RVector out(static_cast<Eigen::Index>(pairs.size()));
    const Complex z = psi(spec.measured());
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        out(static_cast<Eigen::Index>(p)) = 2.0 * std::real(d[p](spec.measured()) * std::conj(z));
    }
    return out;
}

SensitivityVector dp_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                         const StepPolicy& policy) {
    const auto b = control.boundaries();
    return dp_dmu(spec, dipole, control, std::span<const double>(b), policy);
}

SensitivityVector dp_dmu(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                         std::span<const double> partition, const StepPolicy& policy) {
    const auto cuts = clean_partition(partition, control.horizon());
    const detail::Model model(spec, dipole);
    const int n = model.dimension();
    SensitivityVector out;
    out.pairs = dipole.support();
    const auto m = out.pairs.size();
    std::vector<RMatrix> directions;
    for (const auto& pair : out.pairs) directions.push_back(sigma_x_real(n, pair));

    // delta z = sum_s <f| U(T, t_{s+1}) dU_s U(t_s, 0) |i>, accumulated forward:
    // total <- U_s total + dU_s psi(t_s).
    CVector psi = CVector::Zero(n);
    psi(spec.initial()) = 1.0;
    std::vector<CVector> total(m, CVector::Zero(n));
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        std::vector<CVector> local(m, CVector::Zero(n));
        CVector psi_s = psi;
        CMatrix u_s = CMatrix::Identity(n, n);
        detail::for_each_step(model, control, cuts[s], cuts[s + 1], policy, [&](const detail::Step& step) {
            for (std::size_t p = 0; p < m; ++p) {
                step.apply(local[p]);
                local[p] += step.field_weighted_derivative(directions[p], model.kappa) * psi_s;
            }
            step.apply(psi_s);
            step.apply(u_s);
        });
        for (std::size_t p = 0; p < m; ++p) total[p] = u_s * total[p] + local[p];
        psi = u_s * psi;
    }

    const Complex z = psi(spec.measured());
    out.population = std::norm(z);
    out.values.resize(static_cast<Eigen::Index>(m));
    for (std::size_t p = 0; p < m; ++p) {
        out.values(static_cast<Eigen::Index>(p)) = 2.0 * std::real(total[p](spec.measured()) * std::conj(z));
    }
    return out;
}

FiniteDifference fd_oracle(const SystemSpec& spec, const DipoleMatrix& dipole, const ControlWaveform& control,
                           LevelPair pair, double h, const StepPolicy& policy) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("finite-difference step must be positive");
    check_pair(dipole, pair);
    const detail::Model base(spec, dipole);
    const RMatrix direction = sigma_x_real(base.dimension(), pair);

    std::size_t steps = 0;
    auto measure = [&](double sign) {
        const detail::Model model(base.h0, base.mu + sign * h * direction, base.kappa);
        CVector psi = CVector::Zero(model.dimension());
        psi(spec.initial()) = 1.0;
        steps = detail::for_each_step(model, control, 0.0, control.horizon(), policy,
                                      [&](const detail::Step& step) { step.apply(psi); });
        return std::norm(psi(spec.measured()));
    };
    FiniteDifference fd;
    fd.value = (measure(1.0) - measure(-1.0)) / (2.0 * h);
    fd.noise_floor = static_cast<double>(std::max<std::size_t>(steps, 1)) * std::numeric_limits<double>::epsilon() / h;
    fd.below_noise_floor = fd.noise_floor > 1e-7;
    return fd;
}

}  // namespace dipid

#include "stepping.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numbers>

namespace dipid::detail {

Model::Model(const SystemSpec& spec, const DipoleMatrix& dipole)
    : h0(spec.normalized_energies()), mu(dipole.normalized()), kappa(coupling_ratio(spec, dipole)) {}

ExpFactor make_factor(const Model& model, double h, double weight, double field) {
    ExpFactor f;
    f.h = h;
    f.weight = weight;
    f.field = field;
    const int n = model.dimension();

    if (field == 0.0) {
        f.diagonal = true;
        f.lambda = weight * model.h0;
        f.vecs = RMatrix::Identity(n, n);
        f.u = CMatrix::Zero(n, n);
        for (int a = 0; a < n; ++a) f.u(a, a) = std::exp(-kI * h * f.lambda(a));
        return f;
    }

    RMatrix g = -model.kappa * field * model.mu;
    g.diagonal() += weight * model.h0;
    Eigen::SelfAdjointEigenSolver<RMatrix> eig(g);
    f.lambda = eig.eigenvalues();
    f.vecs = eig.eigenvectors();

    CVector phases(n);
    for (int a = 0; a < n; ++a) phases(a) = std::exp(-kI * h * f.lambda(a));
    const CMatrix v = f.vecs.cast<Complex>();
    f.u = v * phases.asDiagonal() * v.transpose();
    return f;
}

CMatrix ExpFactor::derivative(const RMatrix& dG) const {
    // d exp(X)[dX] = V (Phi o (V^T dX V)) V^T with X = -i h G and
    // Phi_ab = exp(-i h (l_a + l_b)/2) sinc(h (l_a - l_b)/2).
    const int n = static_cast<int>(lambda.size());
    const RMatrix m = diagonal ? dG : RMatrix(vecs.transpose() * dG * vecs);
    CMatrix inner(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const double y = 0.5 * h * (lambda(a) - lambda(b));
            const double sinc = std::abs(y) < 1e-4 ? 1.0 - y * y / 6.0 : std::sin(y) / y;
            const Complex phi = std::exp(-kI * (0.5 * h * (lambda(a) + lambda(b)))) * sinc;
            inner(a, b) = phi * (-kI * h * m(a, b));
        }
    }
    if (diagonal) return inner;
    const CMatrix v = vecs.cast<Complex>();
    return v * inner * v.transpose();
}

CMatrix Step::unitary() const {
    if (count == 1) return factors[0]->u;
    return factors[1]->u * factors[0]->u;
}

void Step::apply(CVector& v) const {
    for (int j = 0; j < count; ++j) v = factors[j]->u * v;
}

void Step::apply(CMatrix& m) const {
    for (int j = 0; j < count; ++j) m = factors[j]->u * m;
}

CMatrix Step::field_weighted_derivative(const RMatrix& direction, double kappa) const {
    auto dfactor = [&](const ExpFactor& f) -> CMatrix {
        if (f.field == 0.0) return CMatrix::Zero(direction.rows(), direction.cols());
        return f.derivative((-kappa * f.field) * direction);
    };
    if (count == 1) return dfactor(*factors[0]);
    return factors[1]->u * dfactor(*factors[0]) + dfactor(*factors[1]) * factors[0]->u;
}

void check_interval(const ControlWaveform& control, double tau_a, double tau_b) {
    constexpr double kSlack = 1e-9;
    if (!std::isfinite(tau_a) || !std::isfinite(tau_b) || tau_a < -kSlack || tau_b < tau_a ||
        tau_b > control.horizon() + kSlack) {
        throw ValidationError("interval [" + std::to_string(tau_a) + ", " + std::to_string(tau_b) +
                              "] is not inside [0, " + std::to_string(control.horizon()) + "]");
    }
}

std::vector<Piece> make_pieces(const ControlWaveform& control, double tau_a, double tau_b) {
    constexpr double kMerge = 1e-12;
    std::vector<double> cuts{tau_a, tau_b};
    for (const auto& seg : control.segments()) {
        if (const auto* s = std::get_if<SampledSegment>(&seg)) {
            for (std::size_t j = 0; j <= s->amplitudes.size(); ++j) {
                const double t = s->start + static_cast<double>(j) * s->dt;
                if (t > tau_a && t < tau_b) cuts.push_back(t);
            }
        } else {
            for (double t : {segment_start(seg), segment_end(seg)}) {
                if (t > tau_a && t < tau_b) cuts.push_back(t);
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());

    std::vector<double> merged{cuts.front()};
    for (std::size_t j = 1; j < cuts.size(); ++j) {
        if (cuts[j] - merged.back() > kMerge) merged.push_back(cuts[j]);
    }
    merged.back() = tau_b;

    std::vector<Piece> pieces;
    std::size_t seg_idx = 0;
    const auto& segs = control.segments();
    for (std::size_t j = 0; j + 1 < merged.size(); ++j) {
        Piece p;
        p.a = merged[j];
        p.b = merged[j + 1];
        const double mid = 0.5 * (p.a + p.b);
        while (seg_idx < segs.size() && segment_end(segs[seg_idx]) <= mid) ++seg_idx;
        p.field = 0.0;
        if (seg_idx < segs.size() && segment_start(segs[seg_idx]) <= mid) {
            if (const auto* s = std::get_if<SampledSegment>(&segs[seg_idx])) {
                auto idx = static_cast<std::size_t>(std::floor((mid - s->start) / s->dt));
                p.field = s->amplitudes[std::min(idx, s->amplitudes.size() - 1)];
            } else {
                p.field = std::get<ResonantSegment>(segs[seg_idx]);
            }
        }
        pieces.push_back(std::move(p));
    }
    return pieces;
}

std::vector<double> step_nodes(const Piece& piece, double dt) {
    std::vector<double> t;
    const auto* res = std::get_if<ResonantSegment>(&piece.field);
    if (!res) {
        const int n = steps_for(piece.b - piece.a, dt);
        const double h = (piece.b - piece.a) / n;
        t.reserve(static_cast<std::size_t>(n) + 1);
        for (int s = 0; s < n; ++s) t.push_back(piece.a + s * h);
        t.push_back(piece.b);
        return t;
    }
    const int n = steps_for(res->duration, dt);
    const double h = res->duration / n;
    const double slack = 1e-9 * h;
    auto j = static_cast<long>(std::floor((piece.a - res->start + slack) / h));
    t.push_back(piece.a);
    for (++j;; ++j) {
        const double node = res->start + static_cast<double>(j) * h;
        if (node >= piece.b - slack) break;
        t.push_back(node);
    }
    t.push_back(piece.b);
    return t;
}

double resolve_dt(const Model& model, const ControlWaveform& control, const StepPolicy& policy) {
    double dt = policy.max_dt;
    const double omega_max = model.h0.maxCoeff() - model.h0.minCoeff();
    if (omega_max > 0.0) dt = std::min(dt, 2.0 * std::numbers::pi / (policy.points_per_period * omega_max));
    const double amp = model.kappa * control.max_abs_amplitude();
    if (amp > 0.0) dt = std::min(dt, policy.field_factor / amp);
    if (!(dt >= policy.min_dt)) {
        throw PropagationError("step policy requires dt = " + std::to_string(dt) + " below min_dt = " +
                               std::to_string(policy.min_dt));
    }
    return dt;
}

}  // namespace dipid::detail

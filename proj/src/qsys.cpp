#include "dipid/qsys.hpp"

#include "dipid/error.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace dipid {

SystemSpec SystemSpec::create(std::vector<double> energies, int initial, int measured) {
    const int n = static_cast<int>(energies.size());
    if (n < 2) {
        throw ValidationError("system needs at least 2 levels, got " + std::to_string(n));
    }
    for (double e : energies) {
        if (!std::isfinite(e)) throw ValidationError("energies must be finite");
    }
    if (initial < 0 || initial >= n || measured < 0 || measured >= n) {
        throw ValidationError("initial/measured level out of range");
    }

    SystemSpec s;
    s.energies_ = Eigen::Map<const RVector>(energies.data(), n);
    s.scale_ = s.energies_.cwiseAbs().maxCoeff();
    if (s.scale_ == 0.0) throw ValidationError("all energies are zero; ||H0|| must be positive");
    s.normalized_ = s.energies_ / s.scale_;
    s.max_omega_ = s.normalized_.maxCoeff() - s.normalized_.minCoeff();
    s.initial_ = initial;
    s.measured_ = measured;
    return s;
}

SystemSpec SystemSpec::with_levels(int initial, int measured) const {
    if (initial < 0 || initial >= dimension() || measured < 0 || measured >= dimension()) {
        throw ValidationError("initial/measured level out of range");
    }
    SystemSpec s = *this;
    s.initial_ = initial;
    s.measured_ = measured;
    return s;
}

double transition_frequency(const SystemSpec& spec, int m, int n) {
    const int dim = spec.dimension();
    if (m < 0 || n < 0 || m >= dim || n >= dim) throw ValidationError("level index out of range");
    return spec.normalized_energy(m) - spec.normalized_energy(n);
}

ValidationReport validate_system(const SystemSpec& spec, double tol) {
    const int n = spec.dimension();
    std::vector<LevelPair> pairs;
    std::vector<double> gaps;
    for (int l = 0; l < n; ++l) {
        for (int k = l + 1; k < n; ++k) {
            pairs.push_back({l, k});
            gaps.push_back(std::abs(transition_frequency(spec, l, k)));
        }
    }

    ValidationReport report;
    for (std::size_t a = 0; a < pairs.size(); ++a) {
        if (gaps[a] <= tol) report.degenerate_levels.push_back(pairs[a]);
        for (std::size_t b = a + 1; b < pairs.size(); ++b) {
            if (std::abs(gaps[a] - gaps[b]) <= tol) {
                report.clashes.push_back({pairs[a], pairs[b], gaps[a], gaps[b]});
            }
        }
    }
    return report;
}

DipoleMatrix DipoleMatrix::from_matrix(const RMatrix& raw) {
    if (raw.rows() != raw.cols()) throw ValidationError("dipole must be square");
    const int n = static_cast<int>(raw.rows());
    if (n < 2) throw ValidationError("dipole needs dimension >= 2");
    if (!raw.allFinite()) throw ValidationError("dipole entries must be finite");

    const double scale = max_norm(raw);
    if (scale == 0.0) throw ValidationError("dipole is identically zero");
    for (int i = 0; i < n; ++i) {
        if (raw(i, i) != 0.0) throw ValidationError("dipole diagonal must be exactly zero");
        for (int j = i + 1; j < n; ++j) {
            if (std::abs(raw(i, j) - raw(j, i)) > 1e-12 * scale) {
                throw ValidationError("dipole must be symmetric (entry " + LevelPair{i, j}.label() + ")");
            }
        }
    }

    DipoleMatrix d;
    d.scale_ = scale;
    d.normalized_ = (0.5 * (raw + raw.transpose())) / scale;
    for (int l = 0; l < n; ++l) {
        for (int k = l + 1; k < n; ++k) {
            if (d.normalized_(l, k) != 0.0) d.support_.push_back({l, k});
        }
    }
    return d;
}

std::optional<int> DipoleMatrix::support_index(LevelPair pair) const {
    for (std::size_t p = 0; p < support_.size(); ++p) {
        if (support_[p].same_levels(pair)) return static_cast<int>(p);
    }
    return std::nullopt;
}

RVector DipoleMatrix::support_values() const {
    RVector v(support_size());
    for (int p = 0; p < support_size(); ++p) v(p) = normalized_(support_[p].l, support_[p].k);
    return v;
}

DipoleMatrix DipoleMatrix::with_support_values(std::span<const double> values) const {
    if (static_cast<int>(values.size()) != support_size()) {
        throw ValidationError("expected " + std::to_string(support_size()) + " support values, got " +
                              std::to_string(values.size()));
    }
    DipoleMatrix d = *this;
    for (int p = 0; p < support_size(); ++p) {
        if (!std::isfinite(values[p])) throw ValidationError("support values must be finite");
        d.normalized_(support_[p].l, support_[p].k) = values[p];
        d.normalized_(support_[p].k, support_[p].l) = values[p];
    }
    return d;
}

DipoleMatrix DipoleMatrix::with_support_values(const RVector& values) const {
    return with_support_values(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

std::vector<LevelPair> support_basis(const DipoleMatrix& dipole) {
    return dipole.support();
}

double coupling_ratio(const SystemSpec& spec, const DipoleMatrix& dipole) {
    if (spec.dimension() != dipole.dimension()) {
        throw ValidationError("system dimension " + std::to_string(spec.dimension()) +
                              " does not match dipole dimension " + std::to_string(dipole.dimension()));
    }
    return dipole.scale() / spec.energy_scale();
}

std::optional<std::vector<LevelPair>> shortest_coupling_path(const DipoleMatrix& dipole, int from, int to) {
    const int n = dipole.dimension();
    if (from < 0 || to < 0 || from >= n || to >= n) throw ValidationError("level index out of range");

    // BFS over support edges; neighbours visited in ascending order keeps paths deterministic.
    std::vector<int> parent(n, -1);
    std::vector<bool> seen(n, false);
    std::queue<int> queue;
    queue.push(from);
    seen[from] = true;
    while (!queue.empty()) {
        const int u = queue.front();
        queue.pop();
        if (u == to) break;
        for (int v = 0; v < n; ++v) {
            if (!seen[v] && v != u && dipole.normalized()(u, v) != 0.0) {
                seen[v] = true;
                parent[v] = u;
                queue.push(v);
            }
        }
    }
    if (!seen[to]) return std::nullopt;

    std::vector<LevelPair> path;
    for (int v = to; v != from; v = parent[v]) path.push_back({parent[v], v});
    std::reverse(path.begin(), path.end());
    return path;
}

bool coupling_graph_connected(const DipoleMatrix& dipole) {
    for (int k = 1; k < dipole.dimension(); ++k) {
        if (!shortest_coupling_path(dipole, 0, k)) return false;
    }
    return true;
}

QuantumState QuantumState::basis(int n, int k) {
    if (n < 1 || k < 0 || k >= n) throw ValidationError("basis state index out of range");
    CVector v = CVector::Zero(n);
    v(k) = 1.0;
    return QuantumState(std::move(v));
}

QuantumState QuantumState::from_vector(CVector v, double tol) {
    if (v.size() == 0 || !v.allFinite()) throw ValidationError("state must be a finite nonempty vector");
    if (std::abs(v.norm() - 1.0) > tol) {
        throw ValidationError("state is not normalized (norm " + std::to_string(v.norm()) + ")");
    }
    return QuantumState(std::move(v));
}

QuantumState QuantumState::normalize(const CVector& v) {
    const double nrm = v.norm();
    if (!(nrm > 0.0) || !v.allFinite()) throw ValidationError("cannot normalize a zero or non-finite vector");
    return QuantumState(v / nrm);
}

}  // namespace dipid

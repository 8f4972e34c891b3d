// qsys.hpp: domain types for an N-level system driven through a real dipole.
//
// Units: hbar = 1 and time is measured in tau = ||H0|| t. Energies and the
// dipole are stored both as given and normalized by their max norms; every
// other module works with the normalized quantities H0' and mu'.

#pragma once

#include "dipid/linalg.hpp"

#include <optional>
#include <span>
#include <vector>

namespace dipid {

inline constexpr double kDefaultDegeneracyTolerance = 1e-6;

class SystemSpec {
public:
    // initial / measured are 0-based level indices.
    static SystemSpec create(std::vector<double> energies, int initial, int measured);

    int dimension() const noexcept { return static_cast<int>(energies_.size()); }
    const RVector& energies() const noexcept { return energies_; }
    const RVector& normalized_energies() const noexcept { return normalized_; }
    // ||H0|| = max_k |E_k|.
    double energy_scale() const noexcept { return scale_; }
    int initial() const noexcept { return initial_; }
    int measured() const noexcept { return measured_; }

    // Diagonal of H0' = H0 / ||H0||.
    double normalized_energy(int k) const { return normalized_(k); }
    // Largest |omega'_mn| over all level pairs.
    double max_transition_frequency() const noexcept { return max_omega_; }

    // Physical time <-> normalized time.
    double to_normalized_time(double t) const noexcept { return t * scale_; }
    double to_physical_time(double tau) const noexcept { return tau / scale_; }

    SystemSpec with_levels(int initial, int measured) const;

private:
    RVector energies_;
    RVector normalized_;
    double scale_ = 1.0;
    double max_omega_ = 0.0;
    int initial_ = 0;
    int measured_ = 0;
};

// omega'_mn = E'_m - E'_n (0-based indices). Antisymmetric in (m,n).
double transition_frequency(const SystemSpec& spec, int m, int n);

struct TransitionClash {
    LevelPair first;
    LevelPair second;
    double first_gap = 0.0;   // |omega'| of first
    double second_gap = 0.0;  // |omega'| of second
};

struct ValidationReport {
    std::vector<TransitionClash> clashes;    // distinct pairs with |gap_a - gap_b| <= tol
    std::vector<LevelPair> degenerate_levels;  // pairs with a gap <= tol

    bool ok() const noexcept { return clashes.empty() && degenerate_levels.empty(); }
};

// Checks the non-degenerate-transition condition on normalized gaps.
ValidationReport validate_system(const SystemSpec& spec, double tol = kDefaultDegeneracyTolerance);

// Real symmetric, zero-diagonal coupling with a fixed support.
//
// The support (nonzero strict-upper entries, row-major order) is structural:
// candidates produced by with_support_values() keep it even if a value passes
// through zero, and they keep the scale ||mu|| of the matrix they came from.
class DipoleMatrix {
public:
    static DipoleMatrix from_matrix(const RMatrix& raw);

    int dimension() const noexcept { return static_cast<int>(normalized_.rows()); }
    // ||mu||, the max-norm scale.
    double scale() const noexcept { return scale_; }
    // mu' = mu / ||mu||.
    const RMatrix& normalized() const noexcept { return normalized_; }
    RMatrix physical() const { return scale_ * normalized_; }

    const std::vector<LevelPair>& support() const noexcept { return support_; }
    int support_size() const noexcept { return static_cast<int>(support_.size()); }
    std::optional<int> support_index(LevelPair pair) const;

    // mu'_p for p in support order.
    RVector support_values() const;
    // Same scale and support, normalized entries replaced.
    DipoleMatrix with_support_values(std::span<const double> values) const;
    DipoleMatrix with_support_values(const RVector& values) const;

private:
    RMatrix normalized_;
    double scale_ = 1.0;
    std::vector<LevelPair> support_;
};

// Ordered support pairs (l < k, row-major), i.e. p -> (l_p, k_p).
std::vector<LevelPair> support_basis(const DipoleMatrix& dipole);

// ||mu|| / ||H0||, the factor in front of the field in the normalized equation.
double coupling_ratio(const SystemSpec& spec, const DipoleMatrix& dipole);

bool coupling_graph_connected(const DipoleMatrix& dipole);

// Shortest chain of support edges from level `from` to level `to` (empty when equal).
std::optional<std::vector<LevelPair>> shortest_coupling_path(const DipoleMatrix& dipole, int from, int to);

class QuantumState {
public:
    static QuantumState basis(int n, int k);
    // Throws unless | ||v|| - 1 | <= tol.
    static QuantumState from_vector(CVector v, double tol = 1e-12);
    static QuantumState normalize(const CVector& v);

    int dimension() const noexcept { return static_cast<int>(v_.size()); }
    const CVector& vector() const noexcept { return v_; }

private:
    explicit QuantumState(CVector v) : v_(std::move(v)) {}
    CVector v_;
};

}  // namespace dipid

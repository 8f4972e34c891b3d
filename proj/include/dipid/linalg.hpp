// linalg.hpp: matrix aliases, level pairs and the Pauli-like coupling basis.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <string>

namespace dipid {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

// Two distinct levels, stored 0-based. Files and user-facing output are 1-based.
struct LevelPair {
    int l = 0;
    int k = 0;

    friend bool operator==(const LevelPair&, const LevelPair&) = default;

    // Same unordered pair {l,k}.
    bool same_levels(const LevelPair& other) const noexcept {
        return (l == other.l && k == other.k) || (l == other.k && k == other.l);
    }

    // "l-k" in 1-based labels.
    std::string label() const { return std::to_string(l + 1) + "-" + std::to_string(k + 1); }
};

enum class PauliKind { X, Y, Z };

// sigma_x^{lk} = |l><k| + |k><l|, sigma_y^{lk} = -i|l><k| + i|k><l|,
// sigma_z^{lk} = |l><l| - |k><k|, all embedded in dimension n.
struct PauliLike {
    LevelPair pair;
    PauliKind kind = PauliKind::X;

    CMatrix matrix(int n) const;
};

CMatrix sigma_x(int n, LevelPair pair);
CMatrix sigma_y(int n, LevelPair pair);
CMatrix sigma_z(int n, LevelPair pair);

// Real form of sigma_x, used on the hot propagation paths.
RMatrix sigma_x_real(int n, LevelPair pair);

// Entrywise max norm max_ij |A_ij|.
template <typename Derived>
double max_norm(const Eigen::MatrixBase<Derived>& a) {
    return a.cwiseAbs().maxCoeff();
}

// max_ij |(U^dagger U - I)_ij|
double unitarity_defect(const CMatrix& u);

}  // namespace dipid

#include "dipid/linalg.hpp"

#include "dipid/error.hpp"

namespace dipid {

namespace {

void check_pair(int n, LevelPair pair) {
    if (pair.l < 0 || pair.k < 0 || pair.l >= n || pair.k >= n || pair.l == pair.k) {
        throw ValidationError("level pair " + pair.label() + " invalid for dimension " + std::to_string(n));
    }
}

}  // namespace

CMatrix PauliLike::matrix(int n) const {
    switch (kind) {
        case PauliKind::X: return sigma_x(n, pair);
        case PauliKind::Y: return sigma_y(n, pair);
        case PauliKind::Z: return sigma_z(n, pair);
    }
    return {};
}

CMatrix sigma_x(int n, LevelPair pair) {
    return sigma_x_real(n, pair).cast<Complex>();
}

CMatrix sigma_y(int n, LevelPair pair) {
    check_pair(n, pair);
    CMatrix m = CMatrix::Zero(n, n);
    m(pair.l, pair.k) = -kI;
    m(pair.k, pair.l) = kI;
    return m;
}

CMatrix sigma_z(int n, LevelPair pair) {
    check_pair(n, pair);
    CMatrix m = CMatrix::Zero(n, n);
    m(pair.l, pair.l) = 1.0;
    m(pair.k, pair.k) = -1.0;
    return m;
}

RMatrix sigma_x_real(int n, LevelPair pair) {
    check_pair(n, pair);
    RMatrix m = RMatrix::Zero(n, n);
    m(pair.l, pair.k) = 1.0;
    m(pair.k, pair.l) = 1.0;
    return m;
}

double unitarity_defect(const CMatrix& u) {
    return max_norm(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()));
}

}  // namespace dipid

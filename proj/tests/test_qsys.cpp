#include "dipid/error.hpp"
#include "dipid/qsys.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <limits>
#include <random>

using namespace dipid;

TEST(ValidateSystem, EquallySpacedLevelsAreDegenerate) {
    const auto spec = SystemSpec::create({0.0, 1.0, 2.0}, 0, 1);
    const auto report = validate_system(spec, 1e-6);
    EXPECT_FALSE(report.ok());
    ASSERT_EQ(report.clashes.size(), 1u);
    // |E2-E1| == |E3-E2| (1-based)
    EXPECT_EQ(report.clashes[0].first, (LevelPair{0, 1}));
    EXPECT_EQ(report.clashes[0].second, (LevelPair{1, 2}));
}

TEST(ValidateSystem, DistinctGapsPass) {
    const auto spec = SystemSpec::create({0.0, 1.0, 2.5}, 0, 1);
    EXPECT_TRUE(validate_system(spec).ok());
}

TEST(ValidateSystem, NearlyEqualGapsViolateTolerance) {
    // Gaps are 1, 1e-9 and 1 + 1e-9; enumerating all gap pairs by hand, only
    // (1 vs 1 + 1e-9) is within tol, and the 1e-9 gap itself is a near-degenerate level.
    const auto spec = SystemSpec::create({0.0, 1.0, 1.0 + 1e-9}, 0, 1);
    const auto report = validate_system(spec, 1e-6);
    ASSERT_EQ(report.clashes.size(), 1u);
    EXPECT_EQ(report.clashes[0].first, (LevelPair{0, 1}));
    EXPECT_EQ(report.clashes[0].second, (LevelPair{0, 2}));
    ASSERT_EQ(report.degenerate_levels.size(), 1u);
    EXPECT_EQ(report.degenerate_levels[0], (LevelPair{1, 2}));
}

TEST(SystemSpec, RejectsBadInput) {
    EXPECT_THROW(SystemSpec::create({1.0}, 0, 0), ValidationError);
    EXPECT_THROW(SystemSpec::create({0.0, std::numeric_limits<double>::quiet_NaN()}, 0, 1), ValidationError);
    EXPECT_THROW(SystemSpec::create({0.0, std::numeric_limits<double>::infinity()}, 0, 1), ValidationError);
    EXPECT_THROW(SystemSpec::create({0.0, 0.0}, 0, 1), ValidationError);
    EXPECT_THROW(SystemSpec::create({0.0, 1.0}, 0, 2), ValidationError);
}

TEST(SystemSpec, NormalizesByMaxNorm) {
    const auto spec = SystemSpec::create({-3.0, 1.0, 2.0}, 0, 2);
    EXPECT_DOUBLE_EQ(spec.energy_scale(), 3.0);
    EXPECT_DOUBLE_EQ(spec.normalized_energies().cwiseAbs().maxCoeff(), 1.0);
    EXPECT_DOUBLE_EQ(spec.to_physical_time(spec.to_normalized_time(1.7)), 1.7);
}

TEST(TransitionFrequency, Examples) {
    const auto two = SystemSpec::create({0.0, 1.0}, 0, 1);
    EXPECT_DOUBLE_EQ(transition_frequency(two, 1, 0), 1.0);
    EXPECT_DOUBLE_EQ(transition_frequency(two, 1, 1), 0.0);

    // E = (0, 1, 2.5) normalizes to (0, 0.4, 1); (3,2) in 1-based labels is 1.5 raw.
    const auto three = fixtures::three_level_spec();
    EXPECT_NEAR(transition_frequency(three, 2, 1) * three.energy_scale(), 1.5, 1e-15);
    for (int m = 0; m < 3; ++m) {
        for (int n = 0; n < 3; ++n) {
            EXPECT_EQ(transition_frequency(three, m, n), -transition_frequency(three, n, m));
        }
    }
}

TEST(SupportBasis, Examples) {
    EXPECT_EQ(support_basis(fixtures::two_level_dipole()), (std::vector<LevelPair>{{0, 1}}));
    EXPECT_EQ(support_basis(fixtures::ladder_dipole()), (std::vector<LevelPair>{{0, 1}, {1, 2}}));
    EXPECT_EQ(fixtures::full4_dipole().support_size(), 6);  // N(N-1)/2
}

TEST(SupportBasis, IsBijectionOntoNonzeroUpperEntries) {
    std::mt19937_64 rng(7);
    std::bernoulli_distribution keep(0.6);
    std::uniform_real_distribution<double> val(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 4;
        RMatrix mu = RMatrix::Zero(n, n);
        mu(0, 1) = mu(1, 0) = 1.0;
        for (int l = 0; l < n; ++l) {
            for (int k = l + 1; k < n; ++k) {
                if (keep(rng)) mu(l, k) = mu(k, l) = val(rng);
            }
        }
        const auto d = DipoleMatrix::from_matrix(mu);
        int nonzero = 0;
        for (int l = 0; l < n; ++l) {
            for (int k = l + 1; k < n; ++k) {
                if (mu(l, k) != 0.0) {
                    ++nonzero;
                    const auto p = d.support_index({l, k});
                    ASSERT_TRUE(p.has_value());
                    EXPECT_EQ(d.support()[*p], (LevelPair{l, k}));
                    EXPECT_EQ(d.support_index({k, l}), p);
                } else {
                    EXPECT_FALSE(d.support_index({l, k}).has_value());
                }
            }
        }
        EXPECT_EQ(d.support_size(), nonzero);
        for (std::size_t p = 1; p < d.support().size(); ++p) {
            const auto a = d.support()[p - 1];
            const auto b = d.support()[p];
            EXPECT_TRUE(a.l < b.l || (a.l == b.l && a.k < b.k));
        }
    }
}

TEST(DipoleMatrix, NormalizationIsIdempotent) {
    RMatrix mu(3, 3);
    mu << 0.0, 2.0, -4.0, 2.0, 0.0, 1.0, -4.0, 1.0, 0.0;
    const auto d = DipoleMatrix::from_matrix(mu);
    EXPECT_DOUBLE_EQ(d.scale(), 4.0);
    EXPECT_DOUBLE_EQ(max_norm(d.normalized()), 1.0);
    const auto again = DipoleMatrix::from_matrix(d.normalized());
    EXPECT_DOUBLE_EQ(again.scale(), 1.0);
    EXPECT_EQ(again.normalized(), d.normalized());
    EXPECT_EQ(again.support(), d.support());
}

TEST(DipoleMatrix, RejectsInvalidMatrices) {
    RMatrix asym(2, 2);
    asym << 0.0, 1.0, 0.5, 0.0;
    EXPECT_THROW(DipoleMatrix::from_matrix(asym), ValidationError);
    RMatrix diag(2, 2);
    diag << 0.1, 1.0, 1.0, 0.0;
    EXPECT_THROW(DipoleMatrix::from_matrix(diag), ValidationError);
    EXPECT_THROW(DipoleMatrix::from_matrix(RMatrix::Zero(3, 3)), ValidationError);
    EXPECT_THROW(DipoleMatrix::from_matrix(RMatrix::Zero(2, 3)), ValidationError);
}

TEST(DipoleMatrix, CandidatesKeepScaleAndSupport) {
    const auto d = fixtures::ladder_dipole();
    const RVector v = (RVector(2) << 0.3, 0.0).finished();
    const auto c = d.with_support_values(v);
    EXPECT_EQ(c.scale(), d.scale());
    EXPECT_EQ(c.support(), d.support());
    EXPECT_EQ(c.normalized()(1, 0), 0.3);
    EXPECT_EQ(c.normalized()(0, 2), 0.0);
    EXPECT_EQ(c.support_values(), v);
    EXPECT_THROW(d.with_support_values(RVector::Zero(3)), ValidationError);
}

TEST(PauliLike, HermitianTracelessAndSquareToBlockIdentity) {
    for (int n = 2; n <= 4; ++n) {
        for (int l = 0; l < n; ++l) {
            for (int k = 0; k < n; ++k) {
                if (l == k) continue;
                for (auto kind : {PauliKind::X, PauliKind::Y, PauliKind::Z}) {
                    const CMatrix p = PauliLike{{l, k}, kind}.matrix(n);
                    EXPECT_EQ(p, p.adjoint());
                    EXPECT_EQ(p.trace(), Complex(0.0));
                }
                const CMatrix sx = sigma_x(n, {l, k});
                const CMatrix sq = sx * sx;
                CMatrix block = CMatrix::Zero(n, n);
                block(l, l) = block(k, k) = 1.0;
                EXPECT_EQ(sq, block);
            }
        }
    }
    EXPECT_THROW(sigma_x(3, {1, 1}), ValidationError);
}

TEST(Coupling, GraphConnectivityAndPaths) {
    EXPECT_TRUE(coupling_graph_connected(fixtures::ladder_dipole()));
    const auto path = shortest_coupling_path(fixtures::ladder_dipole(), 0, 2);
    ASSERT_TRUE(path.has_value());
    EXPECT_EQ(*path, (std::vector<LevelPair>{{0, 1}, {1, 2}}));
    EXPECT_TRUE(shortest_coupling_path(fixtures::ladder_dipole(), 1, 1)->empty());

    RMatrix mu = RMatrix::Zero(3, 3);
    mu(0, 1) = mu(1, 0) = 1.0;
    const auto split = DipoleMatrix::from_matrix(mu);
    EXPECT_FALSE(coupling_graph_connected(split));
    EXPECT_FALSE(shortest_coupling_path(split, 0, 2).has_value());
}

TEST(QuantumState, NormChecks) {
    EXPECT_NO_THROW(QuantumState::basis(3, 2));
    EXPECT_THROW(QuantumState::basis(3, 3), ValidationError);
    CVector v(2);
    v << 1.0, 1.0;
    EXPECT_THROW(QuantumState::from_vector(v), ValidationError);
    EXPECT_NEAR(QuantumState::normalize(v).vector().norm(), 1.0, 1e-15);
}

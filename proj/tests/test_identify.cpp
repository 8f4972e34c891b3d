#include "dipid/error.hpp"
#include "dipid/identify.hpp"
#include "dipid/ramsey.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

using namespace dipid;

namespace {

std::vector<ControlWaveform> waveforms(const std::vector<DiscriminatingControl>& set) {
    std::vector<ControlWaveform> out;
    for (const auto& c : set) out.push_back(c.control);
    return out;
}

// Control sets are expensive enough to share across tests.
const std::vector<ControlWaveform>& control_set(const std::string& system, double xi) {
    static std::map<std::pair<std::string, double>, std::vector<ControlWaveform>> cache;
    const auto key = std::make_pair(system, xi);
    auto it = cache.find(key);
    if (it == cache.end()) {
        const auto spec = system == "two" ? fixtures::two_level_spec() : fixtures::three_level_spec();
        const auto dipole = system == "two"      ? fixtures::two_level_dipole()
                            : system == "ladder" ? fixtures::ladder_dipole()
                                                 : fixtures::full3_dipole();
        it = cache.emplace(key, waveforms(build_control_set(spec, dipole, xi))).first;
    }
    return it->second;
}

RVector random_direction(std::mt19937_64& rng, int m, double norm) {
    std::normal_distribution<double> g(0.0, 1.0);
    RVector d(m);
    for (int j = 0; j < m; ++j) d(j) = g(rng);
    return norm * d / d.norm();
}

}  // namespace

TEST(Cost, VanishesAtTheTruth) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.04);
    const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    EXPECT_LE(cost_j(spec, dipole, controls, records), 1e-12);
    const auto eval = evaluate_cost(spec, dipole, controls, records);
    EXPECT_LE(eval.cost, 1e-12);
    EXPECT_LE(eval.gradient.norm(), 1e-9);
}

TEST(Cost, SingleRecordArithmetic) {
    const auto spec = fixtures::two_level_spec();
    const auto dipole = fixtures::two_level_dipole();
    const std::vector<ControlWaveform> controls{
        ControlWaveform(20.0, {ResonantSegment{0.0, 20.0, 0.1, 1.0}})};
    auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    records[0].value -= 0.1;  // model now sits 0.1 above the record
    EXPECT_NEAR(cost_j(spec, dipole, controls, records), 0.01, 1e-15);
    records[0].control_id = 3;
    EXPECT_THROW(cost_j(spec, dipole, controls, records), ValidationError);
}

TEST(Cost, QuadraticModelNearTheTruth) {
    // J = sum r^2 and H = sum g g^T, so J(mu + d) ~ d^T H d.
    std::mt19937_64 rng(3);
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::full3_dipole();
    const auto& controls = control_set("full3", 0.04);
    const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    const RMatrix h = hessian_j(spec, dipole, controls);
    for (int trial = 0; trial < 5; ++trial) {
        const RVector d = random_direction(rng, dipole.support_size(), 1e-3);
        const double model = d.dot(h * d);
        const double j = cost_j(spec, dipole.with_support_values(dipole.support_values() + d), controls, records);
        EXPECT_LE(std::abs(j - model), 0.05 * model);
    }
}

TEST(Hessian, SymmetricPositiveSemidefinite) {
    std::mt19937_64 rng(9);
    const auto spec = fixtures::four_level_spec();
    const auto dipole = fixtures::full4_dipole();
    std::vector<ControlWaveform> controls;
    for (int j = 0; j < 4; ++j) controls.push_back(fixtures::random_control(rng, spec, 1.0));
    const RMatrix h = hessian_j(spec, dipole, controls);
    EXPECT_EQ(h, h.transpose());
    const RVector ev = Eigen::SelfAdjointEigenSolver<RMatrix>(h).eigenvalues();
    EXPECT_GE(ev.minCoeff(), -1e-12 * ev.maxCoeff());
    // Four controls cannot give rank six.
    EXPECT_LE(ev.minCoeff(), 1e-9 * ev.maxCoeff());
}

TEST(Hessian, MatchesSecondDifferencesOfTheCost) {
    // Finite-difference Hessian of J is the true second derivative, 2 sum g g^T.
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.02);
    const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    const RMatrix h = hessian_j(spec, dipole, controls);
    const RVector theta = dipole.support_values();
    const double step = 1e-4;
    auto j_at = [&](const RVector& t) { return cost_j(spec, dipole.with_support_values(t), controls, records); };
    const int m = dipole.support_size();
    RMatrix fd(m, m);
    for (int a = 0; a < m; ++a) {
        for (int b = 0; b < m; ++b) {
            RVector pp = theta, pm = theta, mp = theta, mm = theta;
            pp(a) += step; pp(b) += step;
            pm(a) += step; pm(b) -= step;
            mp(a) -= step; mp(b) += step;
            mm(a) -= step; mm(b) -= step;
            fd(a, b) = (j_at(pp) - j_at(pm) - j_at(mp) + j_at(mm)) / (4.0 * step * step);
        }
    }
    EXPECT_LE((fd - 2.0 * h).norm(), 0.02 * (2.0 * h).norm());
}

TEST(Hessian, SinglePairScalesAsInverseFourXiSquared) {
    const auto spec = fixtures::two_level_spec();
    const auto dipole = fixtures::two_level_dipole();
    const double xi = 0.02;
    const RMatrix h = hessian_j(spec, dipole, control_set("two", xi));
    ASSERT_EQ(h.rows(), 1);
    EXPECT_NEAR(h(0, 0) * 4.0 * xi * xi, 1.0, 0.2);
}

TEST(Hessian, OffDiagonalIsRelativelySmall) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    for (double xi : {0.04, 0.02}) {
        const RMatrix h = hessian_j(spec, dipole, control_set("ladder", xi));
        EXPECT_LE(std::abs(h(0, 1)) / std::min(h(0, 0), h(1, 1)), 2.0 * xi);
    }
}

TEST(AlphaConvexity, CertificateAndScaling) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const double xi = 0.04;
    const double target = 0.8 / (4.0 * xi * xi);
    const auto report = alpha_convexity(spec, dipole, control_set("ladder", xi), target);
    EXPECT_TRUE(report.certified);
    EXPECT_GE(report.alpha, target);
    EXPECT_DOUBLE_EQ(report.alpha, report.eigenvalues.minCoeff());

    const auto stricter = alpha_convexity(spec, dipole, control_set("ladder", xi), 4.0 * report.alpha);
    EXPECT_FALSE(stricter.certified);
    EXPECT_LT(stricter.suggested_xi, xi);

    const std::vector<ControlWaveform> none;
    EXPECT_EQ(alpha_convexity(spec, dipole, none, 1.0).alpha, 0.0);
    const std::vector<ControlWaveform> zeros{ControlWaveform::zero(10.0), ControlWaveform::zero(20.0)};
    EXPECT_EQ(alpha_convexity(spec, dipole, zeros, 1.0).alpha, 0.0);
}

TEST(LocalIdentify, StartingAtTheTruthTakesNoSteps) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.04);
    const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    const auto r = local_identify(spec, controls, records, dipole);
    EXPECT_TRUE(r.converged);
    EXPECT_EQ(r.iterations, 0);
}

TEST(LocalIdentify, RecoversPerturbedDipoles) {
    std::mt19937_64 rng(11);
    const auto spec = fixtures::three_level_spec();
    for (const std::string system : {"ladder", "full3"}) {
        const auto dipole = system == "ladder" ? fixtures::ladder_dipole() : fixtures::full3_dipole();
        const auto& controls = control_set(system, 0.04);
        const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
        for (int trial = 0; trial < 3; ++trial) {
            const RVector start = dipole.support_values() + random_direction(rng, dipole.support_size(), 1e-3);
            const auto r = local_identify(spec, controls, records, dipole.with_support_values(start));
            EXPECT_TRUE(r.converged) << r.status;
            EXPECT_LE((r.estimate.support_values() - dipole.support_values()).cwiseAbs().maxCoeff(), 1e-7);
            // Off-support entries stay exactly zero.
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) {
                    if (!dipole.support_index({a, b}) && a != b) EXPECT_EQ(r.estimate.normalized()(a, b), 0.0);
                    if (a == b) EXPECT_EQ(r.estimate.normalized()(a, b), 0.0);
                }
            }
        }
    }
}

TEST(LocalIdentify, IterationLimitIsReported) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.04);
    const auto records = simulate_records(spec, dipole, controls, 0.0, 1);
    IdentifyConfig config;
    config.max_iterations = 1;
    RVector start = dipole.support_values();
    start(0) += 1e-3;
    const auto r = local_identify(spec, controls, records, dipole.with_support_values(start), config);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 1);
}

TEST(LocalIdentify, NoisyEstimateStaysInsideTheRadius) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.04);
    const double var = 1e-6;
    const auto records = simulate_records(spec, dipole, controls, var, 77);
    const auto r = local_identify(spec, controls, records, dipole);
    EXPECT_TRUE(r.converged);
    const double radius = std::sqrt(var / r.alpha);
    EXPECT_LE((r.estimate.support_values() - dipole.support_values()).norm(), 3.0 * radius);
}

TEST(NoiseStudy, NoiselessAndReproducible) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const auto& controls = control_set("ladder", 0.04);
    const std::vector<double> vars{0.0, 1e-6};
    const auto a = noise_study(spec, dipole, controls, vars, 6, 5, {}, 1);
    const auto b = noise_study(spec, dipole, controls, vars, 6, 5, {}, 3);
    EXPECT_LE(a.rows[0].rms_error, 1e-7);
    EXPECT_EQ(a.rows[1].errors, b.rows[1].errors);
    const auto c = noise_study(spec, dipole, controls, vars, 6, 6, {}, 1);
    EXPECT_NE(a.rows[1].errors, c.rows[1].errors);
}

TEST(NoiseStudy, DoublingAlphaShrinksErrorBySqrtTwo) {
    const auto spec = fixtures::three_level_spec();
    const auto dipole = fixtures::ladder_dipole();
    const double xi = 0.04;
    const std::vector<double> vars{1e-6};
    const auto wide = noise_study(spec, dipole, control_set("ladder", xi), vars, 60, 13);
    const auto narrow = noise_study(spec, dipole, control_set("ladder", xi / std::sqrt(2.0)), vars, 60, 13);
    EXPECT_NEAR(narrow.alpha / wide.alpha, 2.0, 0.4);
    EXPECT_NEAR(narrow.rows[0].rms_error / wide.rows[0].rms_error, 1.0 / std::sqrt(2.0), 0.2 / std::sqrt(2.0));
}

TEST(LogLogSlope, RecoversPowerLaws) {
    const std::vector<double> x{1e-8, 1e-6, 1e-4};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * std::sqrt(v));
    EXPECT_NEAR(log_log_slope(x, y), 0.5, 1e-12);
}

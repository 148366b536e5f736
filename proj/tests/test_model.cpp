#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>

#include "blochrabi/model.hpp"

using namespace blochrabi;

TEST(Model, PresetMatchesPublishedParameters) {
    const ModelParams p = preset("v0_4");
    EXPECT_DOUBLE_EQ(p.delta, 4.39);
    EXPECT_DOUBLE_EQ(p.tau_a, 0.062);
    EXPECT_DOUBLE_EQ(p.tau_b, -0.62);
    EXPECT_DOUBLE_EQ(p.force, 2.2207);
    EXPECT_DOUBLE_EQ(p.c0, 1.0);
    EXPECT_EQ(p, preset_v0_4());
    EXPECT_THROW(preset("nope"), ParameterError);
}

TEST(Model, DerivedQuantities) {
    const ModelParams p = preset("v0_4");
    const auto d = derive(p);
    EXPECT_NEAR(d.delta_x, (0.062 + 0.62) / 2.2207, 1e-15);
    EXPECT_NEAR(d.delta_x, 0.3071, 5e-5);
    EXPECT_DOUBLE_EQ(d.coupling, p.c0 * p.force);
    EXPECT_NEAR(d.bloch_period, 2.0 * std::numbers::pi / 2.2207, 1e-15);
    EXPECT_NEAR(d.rabi_frequency, std::sqrt(4.39 * 4.39 + 4.0 * d.coupling * d.coupling), 1e-14);
}

TEST(Model, ValidationRejectsNonPhysicalInput) {
    ModelParams p = preset("v0_4");
    EXPECT_NO_THROW(validate(p));
    EXPECT_THROW(validate(p.with_force(0.0)), ParameterError);
    EXPECT_THROW(validate(p.with_force(-1.0)), ParameterError);
    ModelParams q = p;
    q.delta = 0.0;
    EXPECT_THROW(validate(q), ParameterError);
    q = p;
    q.tau_b = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(validate(q), ParameterError);
    q = p;
    q.c0 = std::numeric_limits<double>::infinity();
    EXPECT_THROW(derive(q), ParameterError);
}

TEST(Bands, MatchNumericalDiagonalisation) {
    const ModelParams p = preset("v0_4");
    const double v = p.coupling();
    for (double k = -std::numbers::pi; k <= std::numbers::pi; k += 0.37) {
        Eigen::Matrix2d h;
        h << -0.5 * p.delta - p.tau_a * std::cos(k), v, v, 0.5 * p.delta - p.tau_b * std::cos(k);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h);
        const auto b = band_energies(p, k);
        EXPECT_NEAR(b.e_minus, es.eigenvalues()(0), 1e-13);
        EXPECT_NEAR(b.e_plus, es.eigenvalues()(1), 1e-13);
    }
}

TEST(Bands, UncoupledBandsAreCosines) {
    ModelParams p = preset("v0_4");
    p.c0 = 0.0;
    for (double k : {-2.0, 0.0, 1.1, 3.0}) {
        const auto b = band_energies(p, k);
        EXPECT_NEAR(b.e_minus, -0.5 * p.delta - p.tau_a * std::cos(k), 1e-14);
        EXPECT_NEAR(b.e_plus, 0.5 * p.delta - p.tau_b * std::cos(k), 1e-14);
    }
}

TEST(Bands, LowerBandWidthWithoutCoupling) {
    ModelParams p = preset("v0_4");
    p.c0 = 0.0;
    const auto bands = band_structure(p, 401);
    double lo = 1e300, hi = -1e300;
    for (const auto& b : bands) {
        lo = std::min(lo, b.e_minus);
        hi = std::max(hi, b.e_minus);
    }
    EXPECT_NEAR(hi - lo, 2.0 * 0.062, 1e-12);
}

TEST(Bands, PeriodicSymmetricAndOrdered) {
    const ModelParams p = preset("v0_4");
    for (double k : {0.0, 0.5, 1.7, 3.0}) {
        const auto b = band_energies(p, k);
        const auto shifted = band_energies(p, k + 2.0 * std::numbers::pi);
        const auto mirrored = band_energies(p, -k);
        EXPECT_NEAR(b.e_minus, shifted.e_minus, 1e-13);
        EXPECT_NEAR(b.e_plus, shifted.e_plus, 1e-13);
        EXPECT_NEAR(b.e_minus, mirrored.e_minus, 1e-15);
        EXPECT_LT(b.e_minus, b.e_plus);
    }
}

TEST(Bands, GridShape) {
    const auto bands = band_structure(preset("v0_4"), 5);
    ASSERT_EQ(bands.size(), 5u);
    EXPECT_DOUBLE_EQ(bands.front().k, -std::numbers::pi);
    EXPECT_NEAR(bands.back().k, std::numbers::pi, 1e-15);
    EXPECT_THROW(band_structure(preset("v0_4"), 0), ParameterError);
}

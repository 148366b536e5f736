#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "blochrabi/resonance.hpp"

using namespace blochrabi;
using namespace blochrabi::resonance;

namespace {

ModelParams at_order(int m, double c0 = 1.0) {
    ModelParams p = preset("v0_4");
    p.c0 = c0;
    return p.with_force(p.delta / m);
}

} // namespace

TEST(Prediction, TwoLevelFormulas) {
    const ModelParams p = preset("v0_4").with_force(2.3);
    const auto r = predict(p, 2);
    const double g = p.coupling() * specfun::bessel_j(2, p.delta_x());
    EXPECT_DOUBLE_EQ(r.coupling, g);
    EXPECT_NEAR(r.detuning, 2 * 2.3 - 4.39, 1e-15);
    EXPECT_NEAR(r.amplitude, 4 * g * g / (r.detuning * r.detuning + 4 * g * g), 1e-15);
    EXPECT_NEAR(r.frequency, 0.5 * std::sqrt(r.detuning * r.detuning + 4 * g * g), 1e-15);
    EXPECT_NEAR(r.period_tb, 2.3 / (2.0 * std::abs(g)), 1e-12);
    EXPECT_NEAR(r.half_width, 2.0 * std::abs(g) / (2.3 * 4.39), 1e-15);
}

TEST(Prediction, EffectiveHamiltonianSpectrum) {
    const ModelParams p = preset("v0_4").with_force(2.1);
    for (int ladder : {-3, 0, 5}) {
        const auto h = effective_hamiltonian(p, 2, ladder);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h.matrix);
        EXPECT_NEAR(es.eigenvalues()(1) - es.eigenvalues()(0), 2.0 * predict(p, 2).frequency, 1e-13);
        EXPECT_NEAR(h.detuning, 2 * 2.1 - 4.39, 1e-14);
    }
}

TEST(Prediction, PopulationMatchesMatrixExponential) {
    // Evolve the effective 2x2 problem exactly from the upper ladder state.
    const ModelParams p = preset("v0_4").with_force(2.25);
    const auto h = effective_hamiltonian(p, 2);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(h.matrix);
    for (double t : {0.0, 1.0, 7.3, 40.0}) {
        Eigen::Vector2cd phases;
        for (int i = 0; i < 2; ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * t);
        const Eigen::Matrix2cd u =
            es.eigenvectors().cast<std::complex<double>>() * phases.asDiagonal() * es.eigenvectors().transpose();
        EXPECT_NEAR(std::norm(u(0, 1)), predicted_population(p, 2, t), 1e-13);
    }
}

TEST(Prediction, PeriodScalesInverselyWithCoupling) {
    for (int m : {1, 2, 3}) {
        const double t1 = resonant_period(at_order(m, 1.0), m);
        const double t2 = resonant_period(at_order(m, 2.0), m);
        EXPECT_NEAR(t1 / t2, 2.0, 1e-12);
    }
}

TEST(Prediction, UndefinedWithoutInterbandTilt) {
    ModelParams p = at_order(1);
    p.tau_b = p.tau_a;
    EXPECT_THROW(resonant_period(p, 1), DomainError);
    EXPECT_TRUE(std::isinf(predict(p, 1).period_tb));
    EXPECT_THROW(predict(p, 0), DomainError);
}

TEST(Widths, HierarchyAndSmallTiltEstimate) {
    const ModelParams p = preset("v0_4");
    double previous = 1e300;
    for (int m = 1; m <= 4; ++m) {
        const double w = 2.0 * predict(at_order(m), m).half_width;
        EXPECT_LT(w, previous);
        previous = w;
    }
    // For a small inter-band tilt the estimate approaches 2 Gamma_m.
    ModelParams q = p;
    q.tau_a = 0.001;
    q.tau_b = -0.01;
    for (int m = 1; m <= 3; ++m) {
        const auto r = predict(q.with_force(q.delta / m), m);
        EXPECT_NEAR(r.approx_full_width / (2.0 * r.half_width), 1.0, 1e-4);
    }
}

TEST(BreitWigner, PeakAtInverseResonantForce) {
    const ModelParams p = preset("v0_4");
    for (int m : {1, 2, 3}) {
        const double x0 = m / p.delta;
        EXPECT_NEAR(breit_wigner(p, m, x0), 0.5, 1e-15);
        const double gamma = predict(p.with_force(1.0 / x0), m).half_width;
        EXPECT_LT(breit_wigner(p, m, x0 + 3 * gamma), 0.1);
        EXPECT_LT(breit_wigner(p, m, x0 - 3 * gamma), 0.1);
    }
    EXPECT_THROW(breit_wigner(p, 1, -0.2), ParameterError);
}

TEST(PerturbationTheory, FirstOrderSeries) {
    for (double x : {0.1, 0.3, 0.5}) {
        ModelParams p = preset("v0_4");
        p.force = p.delta;
        p.tau_a = 0.0;
        p.tau_b = -x * p.force;
        const double ratio = perturbation_frequency(p, 1) / (p.coupling() * specfun::bessel_j(1, x));
        EXPECT_NEAR(ratio - 1.0, x * x / 8.0 + std::pow(x, 4) / 96.0, 2.0 * std::pow(x, 6) / 1000.0);
    }
}

TEST(PerturbationTheory, SecondOrderAndLimits) {
    const ModelParams p = at_order(2);
    const double expected = 0.5 * p.coupling() * (p.tau_a * p.tau_a + p.tau_b * p.tau_b) / (8 * p.force * p.force);
    EXPECT_NEAR(perturbation_frequency(p, 2), expected, 1e-15);
    ModelParams flat = at_order(1);
    flat.tau_b = flat.tau_a;
    EXPECT_EQ(perturbation_frequency(flat, 1), 0.0);
    EXPECT_THROW(perturbation_frequency(p, 3), DomainError);
}

TEST(MeasurePeriod, SyntheticEnvelopeWithRipple) {
    const double slow = 37.0, fast = 1.3;
    std::vector<double> t, y;
    for (int i = 0; i <= 40000; ++i) {
        const double ti = 0.01 * i;
        t.push_back(ti);
        const double s = std::sin(std::numbers::pi * ti / slow);
        y.push_back(0.8 * s * s + 0.05 * std::sin(2 * std::numbers::pi * ti / fast));
    }
    const auto m = measure_period(t, y, fast);
    EXPECT_NEAR(m.period, slow, 1e-3 * slow);
    EXPECT_GE(m.maxima.size(), 9u);
}

TEST(MeasurePeriod, NoisyEnvelope) {
    std::mt19937 rng(7);
    std::normal_distribution<double> noise(0.0, 0.02);
    const double slow = 20.0;
    std::vector<double> t, y;
    for (int i = 0; i <= 20000; ++i) {
        const double ti = 0.01 * i;
        t.push_back(ti);
        const double s = std::sin(std::numbers::pi * ti / slow);
        y.push_back(s * s + noise(rng));
    }
    EXPECT_NEAR(measure_period(t, y, 0.5).period, slow, 0.01 * slow);
}

TEST(MeasurePeriod, FailsOnFlatOrShortSignals) {
    std::vector<double> t{0, 1, 2, 3, 4}, y(5, 0.3);
    EXPECT_THROW(measure_period(t, y, 1.0), MeasurementError);
    std::vector<double> t2, y2;
    for (int i = 0; i <= 100; ++i) {
        t2.push_back(i);
        y2.push_back(std::sin(0.01 * i));
    }
    EXPECT_THROW(measure_period(t2, y2, 1.0), MeasurementError);
    EXPECT_THROW(moving_average({0, 1}, {0, 1}, 1.0), MeasurementError);
}

TEST(MeasurePeriod, ResolvedResonanceAtWeakCoupling) {
    const ModelParams p = at_order(2, 0.15);
    const auto r = measure_resonance(p, 2);
    EXPECT_NEAR(r.force, p.force, 0.02 * p.force);
    EXPECT_LT(r.relative_error, 0.03);
    EXPECT_GT(r.peak_population, 0.5);
}

TEST(FitPeaks, RecoversSyntheticLorentzians) {
    std::vector<double> x, y;
    for (int i = 0; i < 400; ++i) {
        const double xi = 0.15 + 0.6 * i / 399.0;
        x.push_back(xi);
        auto lor = [&](double c, double w, double h) { return h * w * w / ((xi - c) * (xi - c) + w * w); };
        y.push_back(0.01 + lor(0.2278, 0.01, 0.5) + lor(0.4556, 0.004, 0.45));
    }
    const auto fits = fit_peaks(x, y);
    ASSERT_EQ(fits.size(), 2u);
    EXPECT_TRUE(fits[0].ok());
    EXPECT_NEAR(fits[0].center, 0.2278, 1e-6);
    EXPECT_NEAR(fits[0].half_width, 0.01, 1e-6);
    EXPECT_LT(fits[0].residual, 1e-3);
    EXPECT_NEAR(fits[1].center, 0.4556, 1e-6);
    EXPECT_NEAR(fits[1].half_width, 0.004, 1e-5);
}

TEST(FitPeaks, NarrowPeakIsFlaggedNotFitted) {
    std::vector<double> x, y;
    for (int i = 0; i < 100; ++i) {
        x.push_back(i * 0.01);
        y.push_back(i == 50 ? 0.4 : 0.0);
    }
    const auto fits = fit_peaks(x, y);
    ASSERT_EQ(fits.size(), 1u);
    EXPECT_FALSE(fits[0].ok());
    EXPECT_EQ(fits[0].grid_index, 50u);
}

TEST(FitPeaks, FlatScanHasNoPeaks) {
    std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5}, y(5, 0.0);
    EXPECT_TRUE(fit_peaks(x, y).empty());
    EXPECT_THROW(fit_peaks(x, {0.0}), ParameterError);
}

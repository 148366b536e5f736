#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "blochrabi/specfun.hpp"

using namespace blochrabi;
using specfun::bessel_j;
using specfun::bessel_table;

namespace {

// Integral representation J_n(x) = (1/pi) int_0^pi cos(n s - x sin s) ds.
// The integrand extends to a smooth 2 pi-periodic function, so the trapezoid
// rule on the full period converges exponentially.
double bessel_integral(int n, double x) {
    const int samples = 2048;
    double sum = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double s = 2.0 * std::numbers::pi * i / samples;
        sum += std::cos(n * s - x * std::sin(s));
    }
    return sum / samples;
}

} // namespace

TEST(Bessel, ReferenceValues) {
    EXPECT_NEAR(bessel_j(0, 1.0), 0.7651976865579666, 1e-15);
    EXPECT_NEAR(bessel_j(1, 1.0), 0.4400505857449335, 1e-15);
    EXPECT_NEAR(bessel_j(2, 1.0), 0.1149034849319005, 1e-15);
    EXPECT_NEAR(bessel_j(0, 2.404825557695773), 0.0, 1e-15);
    EXPECT_DOUBLE_EQ(bessel_j(0, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(bessel_j(3, 0.0), 0.0);
}

TEST(Bessel, MatchesStandardLibrary) {
    double worst = 0.0;
    for (double x : {0.01, 0.3071, 0.5, 1.0, 1.99, 2.01, 3.7, 7.5, 12.0, 25.0, 60.0}) {
        for (int n = 0; n <= 40; ++n) {
            const double ref = std::cyl_bessel_j(static_cast<double>(n), x);
            worst = std::max(worst, std::abs(bessel_j(n, x) - ref));
        }
    }
    EXPECT_LT(worst, 1e-13);
}

TEST(Bessel, MatchesIntegralRepresentation) {
    for (double x : {0.1, 1.5, 4.0, 9.3, 30.0}) {
        for (int n = -12; n <= 12; ++n) {
            EXPECT_NEAR(bessel_j(n, x), bessel_integral(n, x), 1e-13) << "n=" << n << " x=" << x;
        }
    }
}

TEST(Bessel, NegativeOrderAndArgumentParity) {
    for (double x : {0.7, 3.3, 15.0}) {
        for (int n = 0; n <= 9; ++n) {
            const double sign = n % 2 == 0 ? 1.0 : -1.0;
            EXPECT_DOUBLE_EQ(bessel_j(-n, x), sign * bessel_j(n, x));
            EXPECT_DOUBLE_EQ(bessel_j(n, -x), sign * bessel_j(n, x));
        }
    }
}

TEST(Bessel, HighOrderDecaysWithoutUnderflowTrouble) {
    const double v = bessel_j(80, 1.0);
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1e-100);
    EXPECT_NEAR(bessel_j(50, 10.0) / std::cyl_bessel_j(50.0, 10.0), 1.0, 1e-12);
}

TEST(Bessel, DomainErrors) {
    EXPECT_THROW(bessel_j(0, std::numeric_limits<double>::quiet_NaN()), DomainError);
    EXPECT_THROW(bessel_j(0, std::numeric_limits<double>::infinity()), DomainError);
    EXPECT_THROW(bessel_j(1, 2.0e3), DomainError);
    EXPECT_THROW(bessel_table(1.0, -1), DomainError);
}

TEST(BesselTable, SumRuleAndRecurrence) {
    for (double x : {0.05, 0.3071, 1.0, 2.5, 8.0, 40.0, 200.0}) {
        const int n_max = static_cast<int>(std::abs(x)) + 30;
        const auto t = bessel_table(x, n_max);
        EXPECT_LE(t.sum_rule_defect(), 1e-10) << "x=" << x;
        double worst = 0.0;
        for (int n = 1; n < n_max; ++n) {
            const double r = t(n - 1) + t(n + 1) - 2.0 * n / x * t(n);
            worst = std::max(worst, std::abs(r));
        }
        EXPECT_LE(worst, 1e-10) << "x=" << x;
    }
}

TEST(BesselTable, AgreesWithPointEvaluation) {
    for (double x : {-5.2, -0.4, 0.0, 0.4, 2.0, 5.2}) {
        const auto t = bessel_table(x, 20);
        EXPECT_EQ(t.max_order(), 20);
        for (int n = -20; n <= 20; ++n) EXPECT_NEAR(t(n), bessel_j(n, x), 1e-15);
        EXPECT_THROW(t(21), DomainError);
    }
}

TEST(JacobiAnger, ConvergesToTrigonometricValues) {
    for (double z : {0.3071, 1.0, 4.0}) {
        for (double theta : {0.0, 0.4, 1.3, 2.9, -2.2}) {
            const auto ja = specfun::jacobi_anger(z, 20, theta);
            EXPECT_NEAR(ja.cos_part, std::cos(z * std::sin(theta)), 1e-14);
            EXPECT_NEAR(ja.sin_part, std::sin(z * std::sin(theta)), 1e-14);
        }
    }
}

TEST(JacobiAnger, TruncationErrorShrinks) {
    const double z = 2.0, theta = 0.9;
    double previous = 1.0;
    for (int n = 1; n <= 6; ++n) {
        const auto ja = specfun::jacobi_anger(z, n, theta);
        const double err = std::abs(ja.cos_part - std::cos(z * std::sin(theta))) +
                           std::abs(ja.sin_part - std::sin(z * std::sin(theta)));
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_THROW(specfun::jacobi_anger(z, 0, theta), DomainError);
}

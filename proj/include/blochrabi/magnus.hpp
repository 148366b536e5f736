// magnus.hpp: fourth-order Magnus stepping for i dpsi/dt = H(t) psi
//
// Each step exponentiates the two-point Gauss-Legendre Magnus generator
//   M = h/2 (H1 + H2) + i sqrt(3) h^2 / 12 [H1, H2],
// which is Hermitian, so the step operator exp(-i M) is unitary to rounding.
// For a time-independent H the commutator vanishes and the step is exp(-i H h).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>

namespace blochrabi::magnus {

using cplx = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr double gauss_offset = 0.5 - std::numbers::sqrt3 / 6.0;

/// exp(-i M) for a 2x2 Hermitian M, in closed form.
inline Matrix2c expm_hermitian(const Matrix2c& m) {
    const double mean = 0.5 * (m(0, 0).real() + m(1, 1).real());
    const double d = 0.5 * (m(0, 0).real() - m(1, 1).real());
    const cplx q = 0.5 * (m(0, 1) + std::conj(m(1, 0)));
    const double r = std::sqrt(d * d + std::norm(q));
    const double c = std::cos(r);
    const double sinc = (r < 1e-8) ? 1.0 - r * r / 6.0 : std::sin(r) / r;
    const cplx mi(0.0, -1.0);
    Matrix2c u;
    u(0, 0) = c + mi * sinc * d;
    u(1, 1) = c - mi * sinc * d;
    u(0, 1) = mi * sinc * q;
    u(1, 0) = mi * sinc * std::conj(q);
    return std::polar(1.0, -mean) * u;
}

/// One Magnus-4 step from t to t + h for a 2x2 Hamiltonian callable H(t).
template <class HamiltonianFn>
Matrix2c step_operator(const HamiltonianFn& hamiltonian, double t, double h) {
    const Matrix2c h1 = hamiltonian(t + gauss_offset * h);
    const Matrix2c h2 = hamiltonian(t + (1.0 - gauss_offset) * h);
    const Matrix2c comm = h1 * h2 - h2 * h1;
    const Matrix2c gen = 0.5 * h * (h1 + h2) + cplx(0.0, std::numbers::sqrt3 * h * h / 12.0) * comm;
    return expm_hermitian(gen);
}

} // namespace blochrabi::magnus

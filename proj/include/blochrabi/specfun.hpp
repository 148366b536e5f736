// specfun.hpp: integer-order Bessel functions J_n(x) and the Jacobi-Anger expansion
//
// Small arguments (|x| <= 2) use the ascending power series. Larger arguments use
// Miller's downward recurrence normalised with the sum rule J_0 + 2 sum_k J_2k = 1,
// which stays stable for orders above the argument where upward recurrence fails.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "blochrabi/errors.hpp"

namespace blochrabi::specfun {

inline constexpr double max_bessel_argument = 1.0e3;
inline constexpr double series_radius = 2.0;

namespace detail {

inline void check_argument(double x) {
    if (!std::isfinite(x) || std::abs(x) > max_bessel_argument) {
        throw DomainError("bessel_j: argument outside supported range |x| <= 1e3");
    }
}

// Ascending series sum_m (-1)^m (x/2)^(2m+n) / (m! (m+n)!) for n >= 0.
inline double bessel_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int i = 1; i <= n; ++i) {
        term *= half / static_cast<double>(i);
        if (term == 0.0) return 0.0;
    }
    const double q = -half * half;
    double sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= q / (static_cast<double>(m) * static_cast<double>(m + n));
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

// Miller downward recurrence for x > 0, filling J_0 .. J_{n_max}.
inline std::vector<double> bessel_miller(int n_max, double x) {
    const double reach = std::max(static_cast<double>(n_max), x);
    int start = static_cast<int>(reach) + 16 + static_cast<int>(std::sqrt(60.0 * reach));
    start += start % 2;

    std::vector<double> out(static_cast<std::size_t>(n_max) + 1, 0.0);
    double j_next = 0.0;  // J_{k+1}
    double j_curr = 1e-30; // J_k, arbitrary seed
    double norm = 0.0;
    const double two_over_x = 2.0 / x;
    for (int k = start; k >= 1; --k) {
        if (k <= n_max) out[static_cast<std::size_t>(k)] = j_curr;
        if (k % 2 == 0) norm += 2.0 * j_curr;
        const double j_prev = static_cast<double>(k) * two_over_x * j_curr - j_next;
        j_next = j_curr;
        j_curr = j_prev;
        if (std::abs(j_curr) > 1e250) {
            j_curr *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            for (auto& v : out) v *= 1e-250;
        }
    }
    out[0] = j_curr;
    norm += j_curr;
    for (auto& v : out) v /= norm;
    return out;
}

inline double parity_sign(int n) { return (n % 2 == 0) ? 1.0 : -1.0; }

} // namespace detail

/// Bessel function of the first kind J_n(x) for any integer order.
/// Negative orders and arguments follow J_{-n}(x) = J_n(-x) = (-1)^n J_n(x).
inline double bessel_j(int n, double x) {
    detail::check_argument(x);
    double sign = 1.0;
    if (n < 0) {
        n = -n;
        sign *= detail::parity_sign(n);
    }
    if (x < 0.0) {
        x = -x;
        sign *= detail::parity_sign(n);
    }
    if (x == 0.0) return n == 0 ? sign : 0.0;
    if (x <= series_radius) return sign * detail::bessel_series(n, x);
    return sign * detail::bessel_miller(n, x)[static_cast<std::size_t>(n)];
}

/// J_0(x) .. J_{n_max}(x) at a single argument.
struct BesselTable {
    double argument{0.0};
    std::vector<double> values;

    int max_order() const noexcept { return static_cast<int>(values.size()) - 1; }

    /// J_n for any |n| <= max_order, using the parity relation for n < 0.
    double operator()(int n) const {
        const int a = std::abs(n);
        if (a > max_order()) throw DomainError("BesselTable: order outside table");
        const double v = values[static_cast<std::size_t>(a)];
        return (n < 0 && (a % 2 != 0)) ? -v : v;
    }

    /// |J_0^2 + 2 sum_{n>=1} J_n^2 - 1|; small once max_order exceeds |x| + 20.
    double sum_rule_defect() const {
        double s = values.empty() ? 0.0 : values[0] * values[0];
        for (std::size_t i = 1; i < values.size(); ++i) s += 2.0 * values[i] * values[i];
        return std::abs(s - 1.0);
    }
};

inline BesselTable bessel_table(double x, int n_max) {
    detail::check_argument(x);
    if (n_max < 0) throw DomainError("bessel_table: n_max must be >= 0");
    BesselTable table{x, {}};
    const double ax = std::abs(x);
    if (ax == 0.0) {
        table.values.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
        table.values[0] = 1.0;
    } else if (ax <= series_radius) {
        table.values.resize(static_cast<std::size_t>(n_max) + 1);
        for (int n = 0; n <= n_max; ++n) {
            table.values[static_cast<std::size_t>(n)] = detail::bessel_series(n, ax);
        }
    } else {
        table.values = detail::bessel_miller(n_max, ax);
    }
    if (x < 0.0) {
        for (int n = 1; n <= n_max; n += 2) table.values[static_cast<std::size_t>(n)] *= -1.0;
    }
    return table;
}

struct JacobiAnger {
    double cos_part; // approximates cos(z sin theta)
    double sin_part; // approximates sin(z sin theta)
};

/// Truncated Fourier-Bessel series
///   cos(z sin t) = J_0(z) + 2 sum_{n=1}^{N} J_{2n}(z) cos(2n t)
///   sin(z sin t) = 2 sum_{n=0}^{N-1} J_{2n+1}(z) sin((2n+1) t)
/// with N = n_terms. Callers pass the full phase angle (e.g. k + F t).
inline JacobiAnger jacobi_anger(double z, int n_terms, double theta) {
    if (n_terms < 1) throw DomainError("jacobi_anger: n_terms must be >= 1");
    const BesselTable j = bessel_table(z, 2 * n_terms);
    double c = j(0);
    double s = 0.0;
    for (int n = 1; n <= n_terms; ++n) c += 2.0 * j(2 * n) * std::cos(2.0 * n * theta);
    for (int n = 0; n < n_terms; ++n) s += 2.0 * j(2 * n + 1) * std::sin((2.0 * n + 1.0) * theta);
    return {c, s};
}

} // namespace blochrabi::specfun

// dynamics.hpp: momentum-space time evolution of the driven two-level problem
//
// At fixed quasimomentum k the lattice reduces to
//   H(k,t) = [[-delta/2 - tau_a cos(k+Ft), V], [V, delta/2 - tau_b cos(k+Ft)]].
// Removing the diagonal by the pure phases
//   a~ = a exp(i theta_a),  theta_a = -delta t/2 - (tau_a/F)[sin(k+Ft) - sin k],
//   b~ = b exp(i theta_b),  theta_b = +delta t/2 - (tau_b/F)[sin(k+Ft) - sin k],
// leaves the off-diagonal system with coupling V exp(-+i phi) where
//   phi(k,t) = delta t + dx [sin(k+Ft) - sin k],  dx = (tau_a - tau_b)/F.
// Populations are identical in both frames.

#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blochrabi/errors.hpp"
#include "blochrabi/magnus.hpp"
#include "blochrabi/model.hpp"
#include "blochrabi/specfun.hpp"

namespace blochrabi::dynamics {

using cplx = std::complex<double>;
using magnus::Matrix2c;
using magnus::Vector2c;

struct TwoLevelState {
    cplx a{1.0, 0.0}; // lower band
    cplx b{0.0, 0.0}; // upper band
    double k{0.0};
    double t{0.0};

    double norm() const noexcept { return std::norm(a) + std::norm(b); }
    double upper_population() const noexcept { return std::norm(b); }

    static TwoLevelState lower_band(double k = 0.0) { return {cplx(1.0), cplx(0.0), k, 0.0}; }
};

struct Trajectory {
    std::vector<double> times;
    std::vector<TwoLevelState> states;
    std::vector<double> populations; // |b(t)|^2
    double max_norm_drift{0.0};
    std::optional<double> richardson_error; // max |P_h - P_{h/2}| on the recorded grid
};

enum class Frame { lab, interaction };

struct PropagationControls {
    int steps_per_period{512};
    int record_every{1};
    // The lab frame keeps the slowly varying diagonal inside each exponential and
    // is the more accurate choice when V is comparable to delta.
    Frame frame{Frame::lab};
    // When set, the run is repeated with half the step and the maximal
    // population difference must stay below this tolerance.
    std::optional<double> richardson_tolerance{};
};

// ------------------------------------------------------------ Hamiltonians

inline Matrix2c hamiltonian_k(const ModelParams& p, double k, double t) {
    const double c = std::cos(k + p.force * t);
    const double v = p.coupling();
    Matrix2c h;
    h << -0.5 * p.delta - p.tau_a * c, v, v, 0.5 * p.delta - p.tau_b * c;
    return h;
}

/// Inter-band phase phi(k,t) of the off-diagonal frame.
inline double phase(const ModelParams& p, double k, double t) {
    return p.delta * t + p.delta_x() * (std::sin(k + p.force * t) - std::sin(k));
}

/// The off-diagonal (interaction-frame) Hamiltonian [[0, V e^{-i phi}], [V e^{i phi}, 0]].
inline Matrix2c interaction_hamiltonian(const ModelParams& p, double k, double t) {
    const cplx w = std::polar(p.coupling(), phase(p, k, t));
    Matrix2c h;
    h << 0.0, std::conj(w), w, 0.0;
    return h;
}

/// Hamiltonian with only the hopping terms gauged away; its Fourier components
/// are the blocks of the Floquet matrix.
inline Matrix2c hopping_frame_hamiltonian(const ModelParams& p, double k, double t) {
    const double chi = p.delta_x() * (std::sin(k + p.force * t) - std::sin(k));
    const cplx w = std::polar(p.coupling(), chi);
    Matrix2c h;
    h << -0.5 * p.delta, std::conj(w), w, 0.5 * p.delta;
    return h;
}

namespace detail {

// Phases theta_a, theta_b relating lab and interaction frame amplitudes.
inline std::pair<double, double> frame_phases(const ModelParams& p, double k, double t) {
    const double s = std::sin(k + p.force * t) - std::sin(k);
    return {-0.5 * p.delta * t - p.tau_a / p.force * s, 0.5 * p.delta * t - p.tau_b / p.force * s};
}

inline Vector2c to_interaction(const ModelParams& p, double k, double t, const Vector2c& lab) {
    const auto [ta, tb] = frame_phases(p, k, t);
    return {lab(0) * std::polar(1.0, ta), lab(1) * std::polar(1.0, tb)};
}

inline Vector2c to_lab(const ModelParams& p, double k, double t, const Vector2c& rot) {
    const auto [ta, tb] = frame_phases(p, k, t);
    return {rot(0) * std::polar(1.0, -ta), rot(1) * std::polar(1.0, -tb)};
}

inline void check_controls(const PropagationControls& c) {
    if (c.steps_per_period < 1) throw ParameterError("steps_per_period must be >= 1");
    if (c.record_every < 1) throw ParameterError("record_every must be >= 1");
}

} // namespace detail

inline std::size_t step_count(const ModelParams& p, double span, int steps_per_period) {
    return static_cast<std::size_t>(std::ceil(span / (p.bloch_period() / steps_per_period) - 1e-9));
}

/// Take n_steps equal Magnus steps from t = initial.t to t_final and call
/// visit(step, t, state) after every step (step 0 is the initial state). The
/// callback receives lab-frame amplitudes. Returns the final state.
template <class Visitor>
TwoLevelState evolve_steps(const ModelParams& p, const TwoLevelState& initial, double t_final, std::size_t n_steps,
                           Frame frame, Visitor&& visit) {
    const double k = initial.k;
    const double h = (t_final - initial.t) / static_cast<double>(n_steps);

    Vector2c psi(initial.a, initial.b);
    const bool rotating = frame == Frame::interaction;
    if (rotating) psi = detail::to_interaction(p, k, initial.t, psi);

    TwoLevelState state = initial;
    visit(std::size_t{0}, initial.t, state);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        const double t0 = initial.t + static_cast<double>(i - 1) * h;
        const Matrix2c u =
            rotating ? magnus::step_operator([&](double s) { return interaction_hamiltonian(p, k, s); }, t0, h)
                     : magnus::step_operator([&](double s) { return hamiltonian_k(p, k, s); }, t0, h);
        psi = u * psi;
        const double t = (i == n_steps) ? t_final : initial.t + static_cast<double>(i) * h;
        if (!std::isfinite(psi(0).real()) || !std::isfinite(psi(0).imag()) || !std::isfinite(psi(1).real()) ||
            !std::isfinite(psi(1).imag())) {
            throw IntegrationError("propagate: non-finite amplitudes", t);
        }
        const Vector2c lab = rotating ? detail::to_lab(p, k, t, psi) : psi;
        state = TwoLevelState{lab(0), lab(1), k, t};
        visit(i, t, state);
    }
    return state;
}

/// evolve_steps with step size T_B / steps_per_period (rounded so the grid ends at t_final).
template <class Visitor>
TwoLevelState evolve(const ModelParams& p, const TwoLevelState& initial, double t_final,
                     const PropagationControls& controls, Visitor&& visit) {
    validate(p);
    detail::check_controls(controls);
    if (!(t_final > initial.t)) throw ParameterError("propagate: t_final must exceed the initial time");
    const std::size_t n = step_count(p, t_final - initial.t, controls.steps_per_period);
    return evolve_steps(p, initial, t_final, n, controls.frame, std::forward<Visitor>(visit));
}

namespace detail {

inline Trajectory propagate_steps(const ModelParams& p, const TwoLevelState& start, double t_final,
                                  std::size_t n_steps, std::size_t record_every, Frame frame) {
    Trajectory traj;
    const double norm0 = start.norm();
    evolve_steps(p, start, t_final, n_steps, frame, [&](std::size_t step, double t, const TwoLevelState& s) {
        traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(s.norm() - norm0));
        if (step % record_every != 0 && step != n_steps) return;
        traj.times.push_back(t);
        traj.states.push_back(s);
        traj.populations.push_back(s.upper_population());
    });
    return traj;
}

} // namespace detail

/// Numerically exact evolution at quasimomentum k.
inline Trajectory propagate(const ModelParams& p, double k, const TwoLevelState& initial, double t_final,
                            const PropagationControls& controls = {}) {
    validate(p);
    detail::check_controls(controls);
    if (std::abs(initial.norm() - 1.0) > 1e-10) throw ParameterError("propagate: initial state not normalised");
    TwoLevelState start = initial;
    start.k = k;
    if (!(t_final > start.t)) throw ParameterError("propagate: t_final must exceed the initial time");
    const std::size_t n = step_count(p, t_final - start.t, controls.steps_per_period);
    const auto every = static_cast<std::size_t>(controls.record_every);
    Trajectory traj = detail::propagate_steps(p, start, t_final, n, every, controls.frame);
    if (controls.richardson_tolerance) {
        const Trajectory fine = detail::propagate_steps(p, start, t_final, 2 * n, 2 * every, controls.frame);
        double err = 0.0;
        for (std::size_t i = 0; i < traj.populations.size(); ++i) {
            err = std::max(err, std::abs(fine.populations[i] - traj.populations[i]));
        }
        traj.richardson_error = err;
        if (err > *controls.richardson_tolerance) {
            throw IntegrationError("propagate: step-halving check failed (difference " + std::to_string(err) + ")",
                                   t_final);
        }
    }
    return traj;
}

// ------------------------------------------------------- flat-band formula

/// Upper-band amplitude of the flat-band Rabi oscillation, 4V^2 / (delta^2 + 4V^2).
inline double rabi_flat_amplitude(const ModelParams& p) {
    const double v = p.coupling();
    return 4.0 * v * v / (p.delta * p.delta + 4.0 * v * v);
}

/// |b(t)|^2 for tau_a == tau_b, starting in the lower band:
///   A sin^2(Delta~ t / 2), Delta~ = sqrt(delta^2 + 4 V^2).
inline double rabi_flat(const ModelParams& p, double t) {
    validate(p);
    if (p.tau_a != p.tau_b) throw PreconditionError("rabi_flat: requires tau_a == tau_b");
    const double s = std::sin(0.5 * derive(p).rabi_frequency * t);
    return rabi_flat_amplitude(p) * s * s;
}

// ------------------------------------------------ Whittaker-Hill normal form

/// Second-order form of the off-diagonal system. Eliminating b~ gives
///   a~'' + i phi'(t) a~' + V^2 a~ = 0,  phi' = delta + (tau_a - tau_b) cos(k+Ft),
/// and a~ = y exp(i Omega) with Omega' = -phi'/2 removes the first derivative:
///   2 y'' + c(t) y = 0,
///   c(t) = 2V^2 + i F (tau_a - tau_b) sin(k+Ft) + (delta + (tau_a - tau_b) cos(k+Ft))^2 / 2.
struct WhittakerHillProblem {
    ModelParams params;
    double k{0.0};

    cplx coefficient(double t) const {
        const double dtau = params.tau_a - params.tau_b;
        const double arg = k + params.force * t;
        const double v = params.coupling();
        const double drive = params.delta + dtau * std::cos(arg);
        return {2.0 * v * v + 0.5 * drive * drive, params.force * dtau * std::sin(arg)};
    }

    /// Omega(t), with Omega(0) = 0.
    double gauge_phase(double t) const { return -0.5 * phase(params, k, t); }

    double gauge_rate(double t) const {
        return -0.5 * (params.delta + (params.tau_a - params.tau_b) * std::cos(k + params.force * t));
    }

    /// Initial (y, y') from interaction-frame amplitudes at t = 0.
    std::pair<cplx, cplx> initial_conditions(cplx a0, cplx b0) const {
        const cplx i(0.0, 1.0);
        const cplx da = -i * params.coupling() * std::polar(1.0, -phase(params, k, 0.0)) * b0;
        return {a0, da - i * gauge_rate(0.0) * a0};
    }

    cplx reconstruct(cplx y, double t) const { return y * std::polar(1.0, gauge_phase(t)); }
};

inline WhittakerHillProblem whittaker_hill_reduce(const ModelParams& p, double k) {
    validate(p);
    return {p, k};
}

struct WhittakerHillSolution {
    std::vector<double> times;
    std::vector<double> lower_populations; // |a(t)|^2 = |y(t)|^2
};

/// Integrates 2y'' + c(t) y = 0 with classical RK4 on a uniform grid, starting
/// from the lower band (a, b) = (1, 0).
inline WhittakerHillSolution solve_whittaker_hill(const WhittakerHillProblem& prob, double t_final,
                                                  int steps_per_period = 4096) {
    if (!(t_final > 0.0)) throw ParameterError("solve_whittaker_hill: t_final must be > 0");
    const auto n = static_cast<std::size_t>(
        std::ceil(t_final / (prob.params.bloch_period() / steps_per_period) - 1e-9));
    const double h = t_final / static_cast<double>(n);
    auto [y, dy] = prob.initial_conditions(1.0, 0.0);
    auto accel = [&](double t, cplx yy) { return -0.5 * prob.coefficient(t) * yy; };

    WhittakerHillSolution sol;
    sol.times.reserve(n + 1);
    sol.lower_populations.reserve(n + 1);
    sol.times.push_back(0.0);
    sol.lower_populations.push_back(std::norm(prob.reconstruct(y, 0.0)));
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * h;
        const cplx k1y = dy, k1v = accel(t, y);
        const cplx k2y = dy + 0.5 * h * k1v, k2v = accel(t + 0.5 * h, y + 0.5 * h * k1y);
        const cplx k3y = dy + 0.5 * h * k2v, k3v = accel(t + 0.5 * h, y + 0.5 * h * k2y);
        const cplx k4y = dy + h * k3v, k4v = accel(t + h, y + h * k3y);
        y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!std::isfinite(y.real()) || !std::isfinite(y.imag())) {
            throw IntegrationError("solve_whittaker_hill: non-finite solution", t + h);
        }
        sol.times.push_back(t + h);
        sol.lower_populations.push_back(std::norm(prob.reconstruct(y, t + h)));
    }
    return sol;
}

// ------------------------------------------------ no-time-ordering estimate

namespace detail {

// int_{t0}^{t1} exp(i phi(k,t')) dt' by adaptive Gauss-Kronrod on sub-intervals
// short compared to the fastest phase oscillation.
inline cplx phase_integral(const ModelParams& p, double k, double t0, double t1, double& error_sum) {
    using boost::math::quadrature::gauss_kronrod;
    const double rate = p.delta + std::abs(p.tau_a - p.tau_b) + p.force;
    const double piece = std::min(p.bloch_period() / 4.0, std::numbers::pi / rate);
    const auto n = static_cast<std::size_t>(std::ceil((t1 - t0) / piece));
    cplx total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lo = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n);
        const double hi = t0 + (t1 - t0) * static_cast<double>(i + 1) / static_cast<double>(n);
        double err_re = 0.0, err_im = 0.0;
        const double re = gauss_kronrod<double, 31>::integrate(
            [&](double s) { return std::cos(phase(p, k, s)); }, lo, hi, 10, 1e-10, &err_re);
        const double im = gauss_kronrod<double, 31>::integrate(
            [&](double s) { return std::sin(phase(p, k, s)); }, lo, hi, 10, 1e-10, &err_im);
        total += cplx(re, im);
        error_sum += err_re + err_im;
    }
    return total;
}

} // namespace detail

inline constexpr double quadrature_tolerance = 1e-9;

/// sin^2 |V int_0^t exp(i phi(k,t')) dt'| at each requested time (non-decreasing, >= 0),
/// i.e. the first-order estimate obtained by dropping time ordering, starting from (1, 0).
inline std::vector<double> no_time_ordering_series(const ModelParams& p, double k, const std::vector<double>& times) {
    validate(p);
    std::vector<double> out;
    out.reserve(times.size());
    cplx integral = 0.0;
    double last = 0.0;
    double error_sum = 0.0;
    const double v = p.coupling();
    for (double t : times) {
        if (t < last) throw ParameterError("no_time_ordering_series: times must be non-decreasing and >= 0");
        if (t > last) integral += detail::phase_integral(p, k, last, t, error_sum);
        if (error_sum > quadrature_tolerance) {
            throw IntegrationError("no_time_ordering: quadrature error estimate above tolerance", t);
        }
        last = t;
        const double s = std::sin(v * std::abs(integral));
        out.push_back(s * s);
    }
    return out;
}

inline double no_time_ordering_population(const ModelParams& p, double k, double t) {
    if (t < 0.0) throw ParameterError("no_time_ordering_population: t must be >= 0");
    return no_time_ordering_series(p, k, {t}).front();
}

// -------------------------------------------------- long-time averages, scans

inline constexpr int min_samples_per_period = 64;
inline constexpr double min_horizon_periods = 100.0;

/// Nearest resonance order max(1, round(delta/F)).
inline int nearest_order(const ModelParams& p) {
    return std::max(1, static_cast<int>(std::lround(p.delta / p.force)));
}

struct HorizonPolicy {
    double resonant_periods{20.0};     // multiples of the slow resonant period
    double off_resonant_periods{500.0}; // Bloch periods away from resonance
    double detuning_window{10.0};      // |mF - delta| <= window * 2|g| counts as resonant
    double max_periods{20000.0};       // cap in Bloch periods
};

/// Averaging horizon: 20 slow periods pi/|g| near the nearest resonance order,
/// 500 Bloch periods elsewhere, clamped to [100, max_periods] Bloch periods.
inline double default_horizon(const ModelParams& p, const HorizonPolicy& policy = {}) {
    validate(p);
    const int m = nearest_order(p);
    const double g = std::abs(p.coupling() * specfun::bessel_j(m, p.delta_x()));
    const double detuning = std::abs(m * p.force - p.delta);
    double periods = policy.off_resonant_periods;
    if (g > 0.0 && detuning <= policy.detuning_window * 2.0 * g) {
        const double slow = std::numbers::pi / g;
        periods = std::max(periods, policy.resonant_periods * slow / p.bloch_period());
    }
    periods = std::clamp(periods, min_horizon_periods, policy.max_periods);
    return periods * p.bloch_period();
}

/// Mean of |b(t)|^2 over the uniform step grid on (0, horizon].
inline double long_time_average(const ModelParams& p, double k, double horizon,
                                const PropagationControls& controls = {}) {
    validate(p);
    if (horizon < min_horizon_periods * p.bloch_period() * (1.0 - 1e-12)) {
        throw ParameterError("long_time_average: horizon must be >= 100 Bloch periods");
    }
    if (controls.steps_per_period < min_samples_per_period) {
        throw ParameterError("long_time_average: need >= 64 samples per Bloch period");
    }
    double sum = 0.0;
    std::size_t count = 0;
    evolve(p, TwoLevelState::lower_band(k), horizon, controls, [&](std::size_t step, double, const TwoLevelState& s) {
        if (step == 0) return;
        sum += s.upper_population();
        ++count;
    });
    return sum / static_cast<double>(count);
}

struct ScanPoint {
    double inverse_force{0.0};
    double mean_population{0.0};
    std::string error; // empty on success
    bool ok() const noexcept { return error.empty(); }
};

struct ScanOptions {
    std::optional<double> horizon_periods{}; // fixed horizon in Bloch periods; default policy otherwise
    HorizonPolicy horizon_policy{};
    PropagationControls controls{.steps_per_period = 128};
    unsigned threads{1};
};

inline ScanPoint scan_point(const ModelParams& base, double k, double inverse_force, const ScanOptions& opt) {
    ScanPoint pt{inverse_force, 0.0, {}};
    try {
        if (!(inverse_force > 0.0) || !std::isfinite(inverse_force)) throw ParameterError("1/F must be positive");
        const ModelParams p = base.with_force(1.0 / inverse_force);
        const double horizon = opt.horizon_periods ? *opt.horizon_periods * p.bloch_period()
                                                   : default_horizon(p, opt.horizon_policy);
        pt.mean_population = long_time_average(p, k, horizon, opt.controls);
    } catch (const std::exception& e) {
        pt.error = e.what();
    }
    return pt;
}

/// Long-time averages over a strictly increasing 1/F grid. Points are independent;
/// results are stored by grid index so any thread count gives identical output.
inline std::vector<ScanPoint> force_scan(const ModelParams& base, double k, const std::vector<double>& inverse_force_grid,
                                         const ScanOptions& opt = {}) {
    for (std::size_t i = 1; i < inverse_force_grid.size(); ++i) {
        if (!(inverse_force_grid[i] > inverse_force_grid[i - 1])) {
            throw ParameterError("force_scan: grid must be strictly increasing");
        }
    }
    std::vector<ScanPoint> out(inverse_force_grid.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < out.size(); i = next++) {
            out[i] = scan_point(base, k, inverse_force_grid[i], opt);
        }
    };
    const unsigned n_threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(out.size())));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    return out;
}

} // namespace blochrabi::dynamics

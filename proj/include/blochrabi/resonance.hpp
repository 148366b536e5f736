// resonance.hpp: effective two-level model of the m-th order resonance and the
// tools that measure the same quantities from simulated data
//
// In the resonant basis the levels eps^-_{N+m} and eps^+_N become degenerate at
// mF = delta and are coupled directly by g = V J_m(dx). Everything below follows
// from that 2x2 problem: Rabi amplitude 4g^2 / ((mF - delta)^2 + 4g^2), frequency
// sqrt((mF - delta)^2 + 4g^2) / 2, period pi/|g| = F / (2|g|) T_B on resonance, and
// the Breit-Wigner profile of the mean population in 1/F with half-width
// Gamma_m = 2|g| / (F delta).

#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "blochrabi/dynamics.hpp"
#include "blochrabi/errors.hpp"
#include "blochrabi/model.hpp"
#include "blochrabi/specfun.hpp"

namespace blochrabi::resonance {

inline void check_order(int m) {
    if (m < 1) throw DomainError("resonance order m must be >= 1");
}

/// g = V J_m(dx) at the force stored in p.
inline double effective_coupling(const ModelParams& p, int m) {
    return p.coupling() * specfun::bessel_j(m, p.delta_x());
}

struct ResonancePrediction {
    int order{1};
    double detuning{0.0};        // mF - delta
    double coupling{0.0};        // g = V J_m(dx)
    double amplitude{0.0};       // 4 g^2 / (detuning^2 + 4 g^2)
    double frequency{0.0};       // sqrt(detuning^2 + 4 g^2) / 2
    double period_tb{0.0};       // F / (2|g|), slow period in Bloch periods (inf if g = 0)
    double half_width{0.0};      // Gamma_m = 2|g| / (F delta), in units of 1/F
    double approx_full_width{0.0}; // leading-order small-dx estimate of 2 Gamma_m
};

/// (4|C_0|/delta) m^m / (2^m m!) ((tau_a - tau_b)/delta)^m, the small-dx width estimate.
inline double approximate_full_width(const ModelParams& p, int m) {
    check_order(m);
    double factor = 1.0;
    for (int i = 1; i <= m; ++i) factor *= static_cast<double>(m) / (2.0 * i);
    return 4.0 * std::abs(p.c0) / p.delta * factor * std::pow(std::abs(p.tau_a - p.tau_b) / p.delta, m);
}

inline ResonancePrediction predict(const ModelParams& p, int m) {
    validate(p);
    check_order(m);
    ResonancePrediction r;
    r.order = m;
    r.detuning = m * p.force - p.delta;
    r.coupling = effective_coupling(p, m);
    const double g2 = 4.0 * r.coupling * r.coupling;
    const double denom = r.detuning * r.detuning + g2;
    r.amplitude = denom > 0.0 ? g2 / denom : 0.0;
    r.frequency = 0.5 * std::sqrt(denom);
    r.period_tb = r.coupling != 0.0 ? p.force / (2.0 * std::abs(r.coupling))
                                    : std::numeric_limits<double>::infinity();
    r.half_width = 2.0 * std::abs(r.coupling) / (p.force * p.delta);
    r.approx_full_width = approximate_full_width(p, m);
    return r;
}

struct EffectiveHamiltonian {
    Eigen::Matrix2d matrix; // [[eps^-_{N+m}, g], [g, eps^+_N]]
    double detuning;        // eps^-_{N+m} - eps^+_N = mF - delta
};

inline EffectiveHamiltonian effective_hamiltonian(const ModelParams& p, int m, int ladder_index = 0) {
    validate(p);
    check_order(m);
    const double g = effective_coupling(p, m);
    const double lower = -0.5 * p.delta + (ladder_index + m) * p.force;
    const double upper = 0.5 * p.delta + ladder_index * p.force;
    EffectiveHamiltonian h;
    h.matrix << lower, g, g, upper;
    h.detuning = lower - upper;
    return h;
}

/// Upper-band population of the effective Rabi problem,
/// 4g^2 / ((mF - delta)^2 + 4g^2) sin^2(Omega t), Omega = sqrt((mF - delta)^2 + 4g^2) / 2.
inline double predicted_population(const ModelParams& p, int m, double t) {
    const ResonancePrediction r = predict(p, m);
    const double s = std::sin(r.frequency * t);
    return r.amplitude * s * s;
}

/// T_res / T_B = F / (2 |V J_m(dx)|).
inline double resonant_period(const ModelParams& p, int m) {
    const ResonancePrediction r = predict(p, m);
    if (r.coupling == 0.0) throw DomainError("resonant_period: effective coupling vanishes, period undefined");
    return r.period_tb;
}

/// Mean upper-band population near the m-th resonance as a function of 1/F,
///   1/2 Gamma^2 / ((m/delta - 1/F)^2 + Gamma^2),
/// with Gamma = 2|V J_m(dx)| / (F delta) evaluated at F = 1/one_over_f.
inline double breit_wigner(const ModelParams& p, int m, double one_over_f) {
    check_order(m);
    if (!(one_over_f > 0.0)) throw ParameterError("breit_wigner: 1/F must be > 0");
    const ModelParams q = p.with_force(1.0 / one_over_f);
    const double gamma = predict(q, m).half_width;
    const double x = static_cast<double>(m) / q.delta - one_over_f;
    const double denom = x * x + gamma * gamma;
    return denom > 0.0 ? 0.5 * gamma * gamma / denom : 0.0;
}

/// Rabi frequency from degenerate perturbation theory in the site basis, evaluated
/// at the force stored in p (intended for F = delta/m):
///   m = 1: |V (tau_b - tau_a) / delta| / 2
///   m = 2: |V (tau_b^2 + tau_a^2) / (8 F^2)| / 2
inline double perturbation_frequency(const ModelParams& p, int m) {
    validate(p);
    const double v = p.coupling();
    switch (m) {
    case 1:
        return 0.5 * std::abs(v * (p.tau_b - p.tau_a) / p.delta);
    case 2:
        return 0.5 * std::abs(v * (p.tau_b * p.tau_b + p.tau_a * p.tau_a) / (8.0 * p.force * p.force));
    default:
        throw DomainError("perturbation_frequency: only m = 1, 2 are available");
    }
}

// ------------------------------------------------------ period measurement

/// Centred moving average of a uniformly sampled series over `window_time`.
/// Returns (times, values) of the smoothed series.
inline std::pair<std::vector<double>, std::vector<double>> moving_average(const std::vector<double>& times,
                                                                          const std::vector<double>& values,
                                                                          double window_time) {
    if (times.size() != values.size() || times.size() < 3) {
        throw MeasurementError("moving_average: need matching series with at least 3 samples");
    }
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window_time / dt)));
    if (w >= values.size()) throw MeasurementError("moving_average: window longer than the series");
    std::vector<double> st, sv;
    st.reserve(values.size() - w + 1);
    sv.reserve(values.size() - w + 1);
    double acc = std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(w), 0.0);
    for (std::size_t i = 0; i + w <= values.size(); ++i) {
        if (i > 0) acc += values[i + w - 1] - values[i - 1];
        st.push_back(times[i] + 0.5 * static_cast<double>(w - 1) * dt);
        sv.push_back(acc / static_cast<double>(w));
    }
    return {std::move(st), std::move(sv)};
}

struct PeriodMeasurement {
    double period{0.0};
    std::vector<double> maxima; // refined times of the envelope maxima
    double envelope_min{0.0};
    double envelope_max{0.0};
};

/// Period of the slow envelope: smooth with a moving average over `window_time`,
/// locate maxima between hysteresis crossings of the mid level, refine each by a
/// parabola through its neighbours, and average the spacing.
inline PeriodMeasurement measure_period(const std::vector<double>& times, const std::vector<double>& values,
                                        double window_time) {
    const auto [st, sv] = moving_average(times, values, window_time);
    const auto [lo_it, hi_it] = std::minmax_element(sv.begin(), sv.end());
    const double lo = *lo_it, hi = *hi_it;
    const double range = hi - lo;
    if (!(range > 0.0)) throw MeasurementError("measure_period: flat envelope");
    const double upper = lo + 0.6 * range;
    const double lower = lo + 0.4 * range;

    PeriodMeasurement out;
    out.envelope_min = lo;
    out.envelope_max = hi;
    bool above = sv.front() > upper;
    bool complete = !above; // a segment already running at the start is incomplete
    std::size_t best = 0;
    for (std::size_t i = 0; i < sv.size(); ++i) {
        if (!above && sv[i] > upper) {
            above = true;
            complete = true;
            best = i;
        } else if (above) {
            if (sv[i] > sv[best]) best = i;
            if (sv[i] < lower) {
                above = false;
                if (complete && best > 0 && best + 1 < sv.size()) {
                    const double y0 = sv[best - 1], y1 = sv[best], y2 = sv[best + 1];
                    const double curv = y0 - 2.0 * y1 + y2;
                    const double shift = curv != 0.0 ? 0.5 * (y0 - y2) / curv : 0.0;
                    const double step = st[best + 1] - st[best];
                    out.maxima.push_back(st[best] + std::clamp(shift, -1.0, 1.0) * step);
                }
            }
        }
    }
    if (out.maxima.size() < 2) throw MeasurementError("measure_period: fewer than two envelope maxima");
    out.period = (out.maxima.back() - out.maxima.front()) / static_cast<double>(out.maxima.size() - 1);
    return out;
}

/// Slow period of a simulated trajectory with a one-Bloch-period smoothing window.
inline PeriodMeasurement measure_period(const dynamics::Trajectory& traj, double bloch_period) {
    return measure_period(traj.times, traj.populations, bloch_period);
}

// ---------------------------------------------------- locating resonances

struct LocateOptions {
    int steps_per_period{128};
    double initial_window{0.2};    // first F half-window relative to delta/m, divided by m
    double initial_periods{8.0};   // minimal first response time, in Bloch periods
    double initial_fraction{0.1};  // first response time as a fraction of pi/|g|
    double slow_periods{1.0};      // final response time, in predicted slow periods pi/|g|
    double final_resolution{0.02}; // stop once the window half-width < this * (2|g|/m)
    int min_points{21};
    int max_points{4001};
    int max_levels{40};
};

namespace detail {

// Maximum of the one-Bloch-period moving average of |b(t)|^2 on [0, duration].
inline double smoothed_peak(const ModelParams& p, double k, double duration, int steps_per_period) {
    dynamics::PropagationControls c;
    c.steps_per_period = steps_per_period;
    std::vector<double> ring(static_cast<std::size_t>(steps_per_period), 0.0);
    double acc = 0.0, best = 0.0;
    std::size_t filled = 0;
    dynamics::evolve(p, dynamics::TwoLevelState::lower_band(k), duration, c,
                     [&](std::size_t step, double, const dynamics::TwoLevelState& s) {
                         if (step == 0) return;
                         const std::size_t slot = (step - 1) % ring.size();
                         acc += s.upper_population() - ring[slot];
                         ring[slot] = s.upper_population();
                         if (++filled >= ring.size()) best = std::max(best, acc / static_cast<double>(ring.size()));
                     });
    return best;
}

} // namespace detail

struct LocatedResonance {
    double force{0.0};
    double peak_population{0.0}; // smoothed envelope maximum at the located force
};

/// Force of maximal slow-envelope amplitude near F = delta/m. Over a response
/// time D the envelope maximum is a Lorentzian in the detuning with half-width
/// about 2/D, so each level samples the window at spacing 1/(m D) in F, keeps
/// four spacings around the best point and triples D until it reaches one
/// predicted slow period.
inline LocatedResonance locate_resonance(const ModelParams& p, int m, double k = 0.0, const LocateOptions& opt = {}) {
    validate(p);
    check_order(m);
    const ModelParams nominal = p.with_force(p.delta / m);
    const double g0 = std::abs(effective_coupling(nominal, m));
    if (g0 == 0.0) throw MeasurementError("locate_resonance: effective coupling vanishes");
    const double slow = std::numbers::pi / g0;
    const double final_duration = opt.slow_periods * slow;

    double center = nominal.force;
    double window = opt.initial_window * center / m;
    double duration =
        std::min(final_duration, std::max(opt.initial_periods * nominal.bloch_period(), opt.initial_fraction * slow));
    double best_value = 0.0;
    for (int level = 0; level < opt.max_levels; ++level) {
        const double spacing_target = 1.0 / (m * duration);
        const int points = std::clamp(static_cast<int>(std::ceil(2.0 * window / spacing_target)) + 1, opt.min_points,
                                      opt.max_points);
        const double spacing = 2.0 * window / (points - 1);
        std::vector<double> fs(static_cast<std::size_t>(points)), rs(fs.size());
        for (std::size_t i = 0; i < fs.size(); ++i) {
            fs[i] = center - window + spacing * static_cast<double>(i);
            rs[i] = fs[i] > 0.0 ? detail::smoothed_peak(p.with_force(fs[i]), k, duration, opt.steps_per_period) : 0.0;
        }
        const auto imax = static_cast<std::size_t>(std::max_element(rs.begin(), rs.end()) - rs.begin());
        center = fs[imax];
        best_value = rs[imax];
        if (imax > 0 && imax + 1 < rs.size()) {
            const double curv = rs[imax - 1] - 2.0 * rs[imax] + rs[imax + 1];
            if (curv < 0.0) center += 0.5 * (rs[imax - 1] - rs[imax + 1]) / curv * spacing;
        }
        if (duration >= final_duration && window < opt.final_resolution * 2.0 * g0 / m) break;
        window = 4.0 * spacing;
        duration = std::min(final_duration, 3.0 * duration);
    }
    return {center, best_value};
}

struct ResonanceMeasurement {
    int order{1};
    double force{0.0};              // located resonant force
    double predicted_period_tb{0.0}; // F / (2|V J_m(dx)|) at the located force
    double measured_period_tb{0.0};
    double relative_error{0.0};
    double peak_population{0.0};
};

struct MeasureOptions {
    LocateOptions locate{};
    int steps_per_period{256};
    int record_every{4};
    double slow_periods{5.0}; // propagation length in predicted slow periods
};

/// Locate the m-th resonance, propagate over several slow periods there and
/// compare the measured envelope period with F / (2|V J_m(dx)|).
inline ResonanceMeasurement measure_resonance(const ModelParams& p, int m, double k = 0.0,
                                              const MeasureOptions& opt = {}) {
    const LocatedResonance loc = locate_resonance(p, m, k, opt.locate);
    const ModelParams at = p.with_force(loc.force);
    ResonanceMeasurement r;
    r.order = m;
    r.force = loc.force;
    r.peak_population = loc.peak_population;
    r.predicted_period_tb = resonant_period(at, m);
    dynamics::PropagationControls c;
    c.steps_per_period = opt.steps_per_period;
    c.record_every = opt.record_every;
    const double t_final = opt.slow_periods * r.predicted_period_tb * at.bloch_period();
    const dynamics::Trajectory traj = dynamics::propagate(at, k, dynamics::TwoLevelState::lower_band(k), t_final, c);
    r.measured_period_tb = measure_period(traj, at.bloch_period()).period / at.bloch_period();
    r.relative_error = std::abs(r.measured_period_tb - r.predicted_period_tb) / r.predicted_period_tb;
    return r;
}

// ------------------------------------------------------------ peak fitting

struct PeakFit {
    double center{0.0};     // in 1/F
    double half_width{0.0}; // Lorentzian half-width at half maximum, in 1/F
    double height{0.0};     // peak height above the baseline
    double baseline{0.0};
    double residual{0.0};   // RMS fit residual divided by height
    std::size_t grid_index{0}; // index of the sampled maximum
    std::string error;      // non-empty when the fit failed; center falls back to the sampled maximum

    bool ok() const noexcept { return error.empty(); }
};

struct PeakFitOptions {
    double prominence{0.05};
    double window_half_widths{3.0};
};

namespace detail {

// Residuals of baseline + height * w^2 / ((x - x0)^2 + w^2), parameters (x0, w, height, baseline).
struct LorentzianResiduals : Eigen::DenseFunctor<double> {
    const std::vector<double>& x;
    const std::vector<double>& y;

    LorentzianResiduals(const std::vector<double>& xs, const std::vector<double>& ys)
        : Eigen::DenseFunctor<double>(4, static_cast<int>(xs.size())), x(xs), y(ys) {}

    int operator()(const Eigen::VectorXd& q, Eigen::VectorXd& f) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - q(0);
            const double w2 = q(1) * q(1);
            f(static_cast<Eigen::Index>(i)) = q(3) + q(2) * w2 / (d * d + w2) - y[i];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& q, Eigen::MatrixXd& jac) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            const double d = x[i] - q(0);
            const double w2 = q(1) * q(1);
            const double den = d * d + w2;
            jac(r, 0) = q(2) * w2 * 2.0 * d / (den * den);
            jac(r, 1) = q(2) * 2.0 * q(1) * d * d / (den * den);
            jac(r, 2) = w2 / den;
            jac(r, 3) = 1.0;
        }
        return 0;
    }
};

// Indices of local maxima whose topographic prominence reaches `threshold`.
inline std::vector<std::size_t> prominent_maxima(const std::vector<double>& y, double threshold) {
    std::vector<std::size_t> out;
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) {
        const bool left_ok = i == 0 || y[i] > y[i - 1];
        const bool right_ok = i + 1 == n || y[i] >= y[i + 1];
        if (!left_ok || !right_ok) continue;
        double left_min = y[i], right_min = y[i];
        for (std::size_t j = i; j-- > 0;) {
            if (y[j] > y[i]) break;
            left_min = std::min(left_min, y[j]);
        }
        for (std::size_t j = i + 1; j < n; ++j) {
            if (y[j] > y[i]) break;
            right_min = std::min(right_min, y[j]);
        }
        if (y[i] - std::max(left_min, right_min) >= threshold) out.push_back(i);
    }
    return out;
}

} // namespace detail

/// Fit a Lorentzian with constant baseline to each prominent maximum of a scan.
/// x must be strictly increasing. Returns an empty list when no peak qualifies.
inline std::vector<PeakFit> fit_peaks(const std::vector<double>& x, const std::vector<double>& y,
                                      const PeakFitOptions& opt = {}) {
    if (x.size() != y.size()) throw ParameterError("fit_peaks: x and y sizes differ");
    std::vector<PeakFit> fits;
    for (std::size_t i : detail::prominent_maxima(y, opt.prominence)) {
        PeakFit fit;
        fit.grid_index = i;
        fit.center = x[i];
        fit.height = y[i];

        // Local baseline and half-maximum crossings for the starting guess.
        std::size_t lo = i, hi = i;
        while (lo > 0 && y[lo - 1] <= y[lo]) --lo;
        while (hi + 1 < y.size() && y[hi + 1] <= y[hi]) ++hi;
        const double base = std::min(y[lo], y[hi]);
        const double half = base + 0.5 * (y[i] - base);
        auto crossing = [&](std::size_t a, std::size_t b) {
            return x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
        };
        std::size_t l = i, r = i;
        while (l > lo && y[l] > half) --l;
        while (r < hi && y[r] > half) ++r;
        const double xl = (y[l] <= half && l < i) ? crossing(l, l + 1) : x[l];
        const double xr = (y[r] <= half && r > i) ? crossing(r - 1, r) : x[r];
        double hw = 0.5 * (xr - xl);
        if (!(hw > 0.0)) {
            const double spacing = x.size() > 1 ? (x.back() - x.front()) / static_cast<double>(x.size() - 1) : 1.0;
            hw = 0.5 * spacing;
        }
        fit.half_width = hw;
        fit.height = y[i] - base;
        fit.baseline = base;

        std::vector<double> wx, wy;
        const double reach = opt.window_half_widths * hw;
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (std::abs(x[j] - x[i]) <= reach) {
                wx.push_back(x[j]);
                wy.push_back(y[j]);
            }
        }
        if (wx.size() < 5) {
            fit.error = "fit_peaks: fewer than 5 samples inside the fit window";
            fits.push_back(std::move(fit));
            continue;
        }
        detail::LorentzianResiduals functor(wx, wy);
        Eigen::LevenbergMarquardt<detail::LorentzianResiduals> lm(functor);
        Eigen::VectorXd q(4);
        q << x[i], hw, y[i] - base, base;
        lm.minimize(q);
        const double w = std::abs(q(1));
        const bool sane = std::isfinite(q(0)) && std::isfinite(w) && w > 0.0 && q(2) > 0.0 &&
                          q(0) >= wx.front() && q(0) <= wx.back();
        if (!sane) {
            fit.error = "fit_peaks: ill-conditioned Lorentzian fit";
            fits.push_back(std::move(fit));
            continue;
        }
        Eigen::VectorXd res(static_cast<Eigen::Index>(wx.size()));
        functor(q, res);
        fit.center = q(0);
        fit.half_width = w;
        fit.height = q(2);
        fit.baseline = q(3);
        fit.residual = std::sqrt(res.squaredNorm() / static_cast<double>(wx.size())) / q(2);
        fits.push_back(std::move(fit));
    }
    return fits;
}

inline std::vector<PeakFit> fit_peaks(const std::vector<dynamics::ScanPoint>& scan, const PeakFitOptions& opt = {}) {
    std::vector<double> x, y;
    for (const auto& pt : scan) {
        if (!pt.ok()) continue;
        x.push_back(pt.inverse_force);
        y.push_back(pt.mean_population);
    }
    return fit_peaks(x, y, opt);
}

} // namespace blochrabi::resonance

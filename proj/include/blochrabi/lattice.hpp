// lattice.hpp: coordinate-space two-band Hamiltonian, resonant (Bessel) basis,
// transformed Hamiltonian and Floquet matrix
//
// Basis ordering is interleaved by site: index(l, band) = 2 (l + L) + band, with
// band 0 = a (lower) and band 1 = b (upper), for l in [-L, L]. The Floquet matrix
// uses the same ordering with the photon index n in place of the site l, which is
// the identification under which it coincides with the transformed Hamiltonian.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

#include "blochrabi/errors.hpp"
#include "blochrabi/model.hpp"
#include "blochrabi/specfun.hpp"

namespace blochrabi::lattice {

using cplx = std::complex<double>;

enum Band : int { band_a = 0, band_b = 1 };

inline Eigen::Index site_index(int half_width, int l, int band) {
    return 2 * static_cast<Eigen::Index>(l + half_width) + band;
}

inline Eigen::Index dimension(int half_width) { return 2 * (2 * static_cast<Eigen::Index>(half_width) + 1); }

// -------------------------------------------------------------- states

struct LatticeState {
    int half_width{0};           // sites l in [-L, L]
    Eigen::VectorXcd amplitudes; // interleaved (a_l, b_l)

    cplx a(int l) const { return amplitudes(site_index(half_width, l, band_a)); }
    cplx b(int l) const { return amplitudes(site_index(half_width, l, band_b)); }

    double norm() const { return amplitudes.squaredNorm(); }

    double band_population(int band) const {
        double s = 0.0;
        for (int l = -half_width; l <= half_width; ++l) s += std::norm(amplitudes(site_index(half_width, l, band)));
        return s;
    }

    /// Occupation of the two outermost sites l = +-L.
    double edge_occupation() const {
        const auto i0 = site_index(half_width, -half_width, band_a);
        const auto i1 = site_index(half_width, half_width, band_a);
        return std::norm(amplitudes(i0)) + std::norm(amplitudes(i0 + 1)) + std::norm(amplitudes(i1)) +
               std::norm(amplitudes(i1 + 1));
    }

    /// Upper-band fraction restricted to |l| <= L - margin.
    double interior_band_fraction(int margin) const {
        double upper = 0.0, total = 0.0;
        for (int l = -half_width + margin; l <= half_width - margin; ++l) {
            const double pa = std::norm(a(l)), pb = std::norm(b(l));
            upper += pb;
            total += pa + pb;
        }
        return total > 0.0 ? upper / total : 0.0;
    }

    /// Lower-band plane wave a_l = exp(-i k l) / sqrt(2L + 1). With this sign the
    /// tilt lF moves the quasimomentum as k + Ft, as in the momentum-space model.
    static LatticeState plane_wave(int half_width, double k) {
        LatticeState s{half_width, Eigen::VectorXcd::Zero(dimension(half_width))};
        const double amp = 1.0 / std::sqrt(2.0 * half_width + 1.0);
        for (int l = -half_width; l <= half_width; ++l) {
            s.amplitudes(site_index(half_width, l, band_a)) = std::polar(amp, -k * l);
        }
        return s;
    }

    static LatticeState localized(int half_width, int site, int band = band_a) {
        if (std::abs(site) > half_width) throw ParameterError("LatticeState: site outside lattice");
        LatticeState s{half_width, Eigen::VectorXcd::Zero(dimension(half_width))};
        s.amplitudes(site_index(half_width, site, band)) = 1.0;
        return s;
    }
};

// ------------------------------------------------------ real-space Hamiltonian

/// Wannier-Stark ladder energies eps_l^- = -delta/2 + lF (band a), eps_l^+ = delta/2 + lF (band b).
inline double ladder_energy(const ModelParams& p, int l, int band) {
    return (band == band_a ? -0.5 : 0.5) * p.delta + l * p.force;
}

struct BandedHamiltonian {
    int half_width{0};
    Eigen::MatrixXd matrix;
};

/// Tight-binding Hamiltonian on sites [-L, L] with open ends: hoppings -tau/2 within
/// each band, on-site inter-band coupling V and the tilted ladder on the diagonal.
inline BandedHamiltonian build_hamiltonian(const ModelParams& p, int half_width) {
    validate(p);
    if (half_width < 1) throw ParameterError("build_hamiltonian: L must be >= 1");
    const int L = half_width;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dimension(L), dimension(L));
    const double v = p.coupling();
    for (int l = -L; l <= L; ++l) {
        const auto ia = site_index(L, l, band_a);
        const auto ib = site_index(L, l, band_b);
        h(ia, ia) = ladder_energy(p, l, band_a);
        h(ib, ib) = ladder_energy(p, l, band_b);
        h(ia, ib) = h(ib, ia) = v;
        if (l < L) {
            h(ia, ia + 2) = h(ia + 2, ia) = -0.5 * p.tau_a;
            h(ib, ib + 2) = h(ib + 2, ib) = -0.5 * p.tau_b;
        }
    }
    return {L, std::move(h)};
}

inline double hermiticity_residual(const Eigen::MatrixXd& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

// --------------------------------------------------------- resonant basis

/// Single-band diagonalising maps |alpha_n> = sum_l J_{l-n}(tau_a/F) |a_l> and
/// |beta_n> = sum_l J_{l-n}(tau_b/F) |b_l>, for columns n in [-L, L] represented
/// on sites [-L - w, L + w] (w = window). Entries with |l - n| > w are dropped.
struct ResonantBasis {
    int half_width{0};
    int window{0};
    Eigen::MatrixXd map_a; // rows: sites, columns: n
    Eigen::MatrixXd map_b;

    int site_half_width() const noexcept { return half_width + window; }

    /// max |T^T T - 1| over both bands.
    double unitarity_defect() const {
        const auto n = map_a.cols();
        const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
        return std::max((map_a.transpose() * map_a - id).cwiseAbs().maxCoeff(),
                        (map_b.transpose() * map_b - id).cwiseAbs().maxCoeff());
    }

    /// Two-band map in interleaved ordering, rows on the site lattice and
    /// columns on the resonant lattice.
    Eigen::MatrixXd full_transform() const {
        const int ls = site_half_width();
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dimension(ls), dimension(half_width));
        for (int l = -ls; l <= ls; ++l) {
            for (int n = -half_width; n <= half_width; ++n) {
                t(site_index(ls, l, band_a), site_index(half_width, n, band_a)) = map_a(l + ls, n + half_width);
                t(site_index(ls, l, band_b), site_index(half_width, n, band_b)) = map_b(l + ls, n + half_width);
            }
        }
        return t;
    }
};

inline int default_window(const ModelParams& p) {
    const double x = std::max(std::abs(p.tau_a), std::abs(p.tau_b)) / p.force;
    return static_cast<int>(std::ceil(x)) + 20;
}

inline ResonantBasis resonant_basis(const ModelParams& p, int half_width, std::optional<int> window = {},
                                    double tolerance = 1e-10) {
    validate(p);
    if (half_width < 0) throw ParameterError("resonant_basis: L must be >= 0");
    const int w = window.value_or(default_window(p));
    if (w < 0) throw ParameterError("resonant_basis: window must be >= 0");
    const int ls = half_width + w;
    const auto ja = specfun::bessel_table(p.tau_a / p.force, w);
    const auto jb = specfun::bessel_table(p.tau_b / p.force, w);
    ResonantBasis basis{half_width, w, Eigen::MatrixXd::Zero(2 * ls + 1, 2 * half_width + 1),
                        Eigen::MatrixXd::Zero(2 * ls + 1, 2 * half_width + 1)};
    for (int n = -half_width; n <= half_width; ++n) {
        for (int d = -w; d <= w; ++d) {
            basis.map_a(n + d + ls, n + half_width) = ja(d);
            basis.map_b(n + d + ls, n + half_width) = jb(d);
        }
    }
    const double defect = basis.unitarity_defect();
    if (defect > tolerance) {
        throw AccuracyError("resonant_basis: window too small, unitarity defect " + std::to_string(defect), defect);
    }
    return basis;
}

// ------------------------------------------------ transformed Hamiltonian

/// Hamiltonian in the resonant basis: ladder energies on the diagonal and the
/// inter-band coupling <alpha_l|H|beta_l'> = V J_{l'-l}(dx) for |l' - l| <= n_max.
inline Eigen::MatrixXd build_transformed_hamiltonian(const ModelParams& p, int half_width, int n_max) {
    validate(p);
    if (n_max < 1) throw ParameterError("build_transformed_hamiltonian: n_max must be >= 1");
    if (half_width < 0) throw ParameterError("build_transformed_hamiltonian: L must be >= 0");
    const int L = half_width;
    const auto j = specfun::bessel_table(p.delta_x(), n_max);
    const double v = p.coupling();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dimension(L), dimension(L));
    for (int l = -L; l <= L; ++l) {
        h(site_index(L, l, band_a), site_index(L, l, band_a)) = ladder_energy(p, l, band_a);
        h(site_index(L, l, band_b), site_index(L, l, band_b)) = ladder_energy(p, l, band_b);
        for (int lp = std::max(-L, l - n_max); lp <= std::min(L, l + n_max); ++lp) {
            const double c = v * j(lp - l);
            h(site_index(L, l, band_a), site_index(L, lp, band_b)) = c;
            h(site_index(L, lp, band_b), site_index(L, l, band_a)) = c;
        }
    }
    return h;
}

// --------------------------------------------------------- Floquet matrix

/// Fourier component H^l of the hopping-gauged Hamiltonian at k = 0,
/// H(t) = sum_l H^l exp(i l F t):
///   H^0     = [[-delta/2, V J_0(dx)], [V J_0(dx), delta/2]]
///   H^{2n}  = V J_|2n|(dx) [[0, 1], [1, 0]]
///   H^{odd} = sgn(l) V J_|l|(dx) [[0, -1], [1, 0]]
inline Eigen::Matrix2d floquet_components(const ModelParams& p, int l) {
    validate(p);
    const double g = p.coupling() * specfun::bessel_j(std::abs(l), p.delta_x());
    Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
    if (l == 0) {
        h << -0.5 * p.delta, g, g, 0.5 * p.delta;
    } else if (l % 2 == 0) {
        h << 0.0, g, g, 0.0;
    } else {
        const double s = l > 0 ? 1.0 : -1.0;
        h << 0.0, -s * g, s * g, 0.0;
    }
    return h;
}

struct FloquetMatrix {
    int order{0}; // photon indices n in [-N, N]
    Eigen::MatrixXd matrix;
};

/// Blocks (H_F)^{n,k} = H^{n-k} + n F delta_{nk} for n, k in [-N, N].
inline FloquetMatrix build_floquet_matrix(const ModelParams& p, int order) {
    validate(p);
    if (order < 0) throw ParameterError("build_floquet_matrix: N must be >= 0");
    const int N = order;
    std::vector<Eigen::Matrix2d> comps;
    comps.reserve(static_cast<std::size_t>(4 * N + 1));
    for (int l = -2 * N; l <= 2 * N; ++l) comps.push_back(floquet_components(p, l));
    Eigen::MatrixXd hf = Eigen::MatrixXd::Zero(dimension(N), dimension(N));
    for (int n = -N; n <= N; ++n) {
        for (int k = -N; k <= N; ++k) {
            Eigen::Matrix2d block = comps[static_cast<std::size_t>(n - k + 2 * N)];
            if (n == k) block.diagonal().array() += n * p.force;
            hf.block<2, 2>(site_index(N, n, 0), site_index(N, k, 0)) = block;
        }
    }
    return {N, std::move(hf)};
}

struct IdentityReport {
    double max_deviation{0.0};         // over compared elements
    std::size_t compared{0};
    double max_excluded_deviation{0.0}; // elements outside the common truncation
    std::size_t excluded{0};
};

/// Element-wise comparison of the Floquet matrix (order N) and the transformed
/// Hamiltonian (half-width L, coupling range n_max) on the common index range
/// [-min(N, L), min(N, L)]. Elements whose photon/site offset exceeds n_max are
/// reported separately since one truncation keeps them and the other drops them.
inline IdentityReport compare_floquet_transformed(const ModelParams& p, int order, int half_width, int n_max) {
    const FloquetMatrix hf = build_floquet_matrix(p, order);
    const Eigen::MatrixXd ht = build_transformed_hamiltonian(p, half_width, n_max);
    const int common = std::min(order, half_width);
    IdentityReport rep;
    for (int n = -common; n <= common; ++n) {
        for (int m = -common; m <= common; ++m) {
            for (int bn = 0; bn < 2; ++bn) {
                for (int bm = 0; bm < 2; ++bm) {
                    const double d = std::abs(hf.matrix(site_index(order, n, bn), site_index(order, m, bm)) -
                                              ht(site_index(half_width, n, bn), site_index(half_width, m, bm)));
                    if (std::abs(n - m) <= n_max) {
                        rep.max_deviation = std::max(rep.max_deviation, d);
                        ++rep.compared;
                    } else {
                        rep.max_excluded_deviation = std::max(rep.max_excluded_deviation, d);
                        ++rep.excluded;
                    }
                }
            }
        }
    }
    return rep;
}

/// Quasi-energies folded into [-F/2, F/2), sorted.
inline std::vector<double> quasi_energies(const FloquetMatrix& hf, double force) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hf.matrix, Eigen::EigenvaluesOnly);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(es.eigenvalues().size()));
    for (double e : es.eigenvalues()) {
        double f = std::fmod(e + 0.5 * force, force);
        if (f < 0.0) f += force;
        out.push_back(f - 0.5 * force);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ------------------------------------------------------ lattice propagation

struct LatticeControls {
    int steps_per_period{512};
    int record_every{1};
    std::optional<double> leak_threshold{1e-8}; // max edge occupation; disabled when empty
    int interior_margin{8};
};

struct LatticeTrajectory {
    std::vector<double> times;
    std::vector<double> upper_populations;    // P_b(t) = sum_l |b_l|^2
    std::vector<double> interior_fractions;   // upper-band fraction on |l| <= L - margin
    LatticeState final_state;
    double max_norm_drift{0.0};
    double max_edge_occupation{0.0};
};

/// Unitary evolution under build_hamiltonian. The Hamiltonian is time independent,
/// so each step applies exp(-i H h), built once from the eigendecomposition.
inline LatticeTrajectory propagate_lattice(const ModelParams& p, const LatticeState& initial, double t_final,
                                           const LatticeControls& controls = {}) {
    validate(p);
    if (!(t_final > 0.0)) throw ParameterError("propagate_lattice: t_final must be > 0");
    if (controls.steps_per_period < 1 || controls.record_every < 1) {
        throw ParameterError("propagate_lattice: invalid step controls");
    }
    if (std::abs(initial.norm() - 1.0) > 1e-10) throw ParameterError("propagate_lattice: initial state not normalised");
    const BandedHamiltonian ham = build_hamiltonian(p, initial.half_width);
    const auto n_steps = static_cast<std::size_t>(
        std::ceil(t_final / (p.bloch_period() / controls.steps_per_period) - 1e-9));
    const double h = t_final / static_cast<double>(n_steps);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ham.matrix);
    const Eigen::MatrixXcd q = es.eigenvectors().cast<cplx>();
    Eigen::VectorXcd phases(es.eigenvalues().size());
    for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::polar(1.0, -es.eigenvalues()(i) * h);
    const Eigen::MatrixXcd step = q * phases.asDiagonal() * q.adjoint();

    LatticeTrajectory traj;
    LatticeState state = initial;
    auto record = [&](double t) {
        traj.times.push_back(t);
        traj.upper_populations.push_back(state.band_population(band_b));
        traj.interior_fractions.push_back(state.interior_band_fraction(controls.interior_margin));
    };
    auto monitor = [&](double t) {
        traj.max_norm_drift = std::max(traj.max_norm_drift, std::abs(state.norm() - 1.0));
        const double edge = state.edge_occupation();
        traj.max_edge_occupation = std::max(traj.max_edge_occupation, edge);
        if (controls.leak_threshold && edge > *controls.leak_threshold) {
            throw AccuracyError("propagate_lattice: boundary occupation " + std::to_string(edge) +
                                    " exceeds threshold at t = " + std::to_string(t),
                                edge);
        }
    };
    monitor(0.0);
    record(0.0);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        state.amplitudes = step * state.amplitudes;
        const double t = (i == n_steps) ? t_final : static_cast<double>(i) * h;
        monitor(t);
        if (i % static_cast<std::size_t>(controls.record_every) == 0 || i == n_steps) record(t);
    }
    traj.final_state = std::move(state);
    return traj;
}

} // namespace blochrabi::lattice

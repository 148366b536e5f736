// model.hpp: physical parameters of the tilted two-band lattice and the band-structure view
//
// All energies are in recoil units with hbar = 1. The force F enters as the
// on-site tilt lF of site l, so the Bloch period is T_B = 2 pi / F.

#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "blochrabi/errors.hpp"

namespace blochrabi {

struct ModelParams {
    double delta{1.0};   // band gap
    double tau_a{0.0};   // hopping of the lower band a
    double tau_b{0.0};   // hopping of the upper band b
    double c0{0.0};      // inter-band coupling constant, V = c0 * F
    double force{1.0};   // Stark force F

    double coupling() const noexcept { return c0 * force; }
    double delta_x() const noexcept { return (tau_a - tau_b) / force; }
    double bloch_period() const noexcept { return 2.0 * std::numbers::pi / force; }

    ModelParams with_force(double f) const {
        ModelParams p = *this;
        p.force = f;
        return p;
    }
    ModelParams with_c0(double c) const {
        ModelParams p = *this;
        p.c0 = c;
        return p;
    }

    bool operator==(const ModelParams&) const = default;
};

inline void validate(const ModelParams& p) {
    if (!std::isfinite(p.delta) || !std::isfinite(p.tau_a) || !std::isfinite(p.tau_b) ||
        !std::isfinite(p.c0) || !std::isfinite(p.force)) {
        throw ParameterError("ModelParams: all fields must be finite");
    }
    if (p.delta <= 0.0) throw ParameterError("ModelParams: delta must be > 0");
    if (p.force <= 0.0) throw ParameterError("ModelParams: force must be > 0");
}

struct DerivedQuantities {
    double coupling;       // V = C_0 F
    double delta_x;        // (tau_a - tau_b) / F
    double bloch_period;   // 2 pi / F
    double rabi_frequency; // sqrt(delta^2 + 4 V^2), flat-band Rabi frequency
};

inline DerivedQuantities derive(const ModelParams& p) {
    validate(p);
    const double v = p.coupling();
    return {v, p.delta_x(), p.bloch_period(), std::sqrt(p.delta * p.delta + 4.0 * v * v)};
}

// Instantaneous eigenvalues of the momentum-space Hamiltonian at t = 0.
struct BandPoint {
    double k;
    double e_minus;
    double e_plus;
};

inline BandPoint band_energies(const ModelParams& p, double k) {
    validate(p);
    if (!std::isfinite(k)) throw ParameterError("band_energies: k must be finite");
    const double c = std::cos(k);
    const double v = p.coupling();
    const double d_a = -0.5 * p.delta - p.tau_a * c;
    const double d_b = 0.5 * p.delta - p.tau_b * c;
    const double mean = 0.5 * (d_a + d_b);
    const double half = std::hypot(0.5 * (d_b - d_a), v);
    return {k, mean - half, mean + half};
}

// Uniform sweep over [-pi, pi] with n points (n >= 2).
inline std::vector<BandPoint> band_structure(const ModelParams& p, std::size_t n) {
    if (n < 2) throw ParameterError("band_structure: need at least two k points");
    std::vector<BandPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k = -std::numbers::pi + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                                 static_cast<double>(n - 1);
        out.push_back(band_energies(p, k));
    }
    return out;
}

// ------------------------------------------------------------------ presets

// The V0 = 4 optical-lattice parameters (delta, tau_a, tau_b) with the resonant
// force F = 2.2207. The coupling constant C_0 is not tabulated for this depth and
// defaults to 1; every resonance width and period scales with it linearly.
inline ModelParams preset_v0_4() {
    return ModelParams{4.39, 0.062, -0.62, 1.0, 2.2207};
}

inline const std::map<std::string, ModelParams>& preset_registry() {
    static const std::map<std::string, ModelParams> registry{{"v0_4", preset_v0_4()}};
    return registry;
}

inline ModelParams preset(const std::string& name) {
    const auto& reg = preset_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw ParameterError("unknown preset '" + name + "'");
    return it->second;
}

} // namespace blochrabi

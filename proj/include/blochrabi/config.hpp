// config.hpp: plain-text key=value configuration and parameter resolution

#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "blochrabi/errors.hpp"
#include "blochrabi/model.hpp"

namespace blochrabi::config {

using KeyValues = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Lines of "key = value"; blank lines and lines starting with '#' are ignored.
/// A later occurrence of a key replaces an earlier one.
inline KeyValues parse_key_values(std::istream& is) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParameterError("config line " + std::to_string(lineno) + ": expected key=value");
        }
        const std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ParameterError("config line " + std::to_string(lineno) + ": empty key");
        kv[key] = trim(t.substr(eq + 1));
    }
    return kv;
}

inline double parse_number(const std::string& key, const std::string& text) {
    const char* begin = text.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
        throw ParameterError("config: '" + key + "' is not a finite number: '" + text + "'");
    }
    return v;
}

inline std::optional<double> get_number(const KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return parse_number(key, it->second);
}

inline const std::vector<std::string>& model_keys() {
    static const std::vector<std::string> keys{"delta", "tau_a", "tau_b", "c0", "force"};
    return keys;
}

/// Parameters from a preset (key "preset") with individual keys overriding it,
/// or from all of delta, tau_a, tau_b, c0 when no preset is named. force is
/// required unless a preset supplies it.
inline ModelParams resolve_params(const KeyValues& kv) {
    ModelParams p;
    const auto preset_it = kv.find("preset");
    if (preset_it != kv.end()) {
        p = preset(preset_it->second);
    } else {
        for (const char* key : {"delta", "tau_a", "tau_b", "c0", "force"}) {
            if (!kv.contains(key)) {
                throw ParameterError(std::string("config: '") + key + "' is required when no preset is given");
            }
        }
    }
    if (auto v = get_number(kv, "delta")) p.delta = *v;
    if (auto v = get_number(kv, "tau_a")) p.tau_a = *v;
    if (auto v = get_number(kv, "tau_b")) p.tau_b = *v;
    if (auto v = get_number(kv, "c0")) p.c0 = *v;
    if (auto v = get_number(kv, "force")) p.force = *v;
    validate(p);
    return p;
}

/// Uniform grid of n points on [lo, hi]; n = 1 gives {lo}.
inline std::vector<double> uniform_grid(double lo, double hi, int n) {
    if (n < 1) throw ParameterError("grid: need at least one point");
    if (n > 1 && !(hi > lo)) throw ParameterError("grid: upper bound must exceed lower bound");
    std::vector<double> g(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return g;
}

} // namespace blochrabi::config

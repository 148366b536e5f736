// blochrabi: command-line front end for band structure, trajectories, resonance
// scans, resonance tables and the Floquet identity check as CSV or JSON files.
//
// Settings come from an optional key=value file (--config) and are overridden
// by flags. Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 check failed.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "blochrabi/config.hpp"
#include "blochrabi/dynamics.hpp"
#include "blochrabi/io.hpp"
#include "blochrabi/lattice.hpp"
#include "blochrabi/model.hpp"
#include "blochrabi/resonance.hpp"

using namespace blochrabi;

namespace {

enum ExitCode { exit_ok = 0, exit_usage = 1, exit_numerical = 2, exit_check = 3 };

struct CheckFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Inputs {
    std::string config_path;
    config::KeyValues flags;
};

class Settings {
public:
    explicit Settings(config::KeyValues kv) : kv_(std::move(kv)) {}

    const config::KeyValues& values() const { return kv_; }
    bool has(const std::string& key) const { return kv_.contains(key); }

    double number(const std::string& key, double fallback) const {
        return config::get_number(kv_, key).value_or(fallback);
    }

    int integer(const std::string& key, int fallback) const {
        const auto v = config::get_number(kv_, key);
        if (!v) return fallback;
        if (*v != std::floor(*v) || std::abs(*v) > 1e9) throw ParameterError("'" + key + "' must be an integer");
        return static_cast<int>(*v);
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

private:
    config::KeyValues kv_;
};

const std::set<std::string> common_keys{"preset", "delta", "tau_a", "tau_b", "c0", "force", "k",
                                        "output", "format", "steps_per_period", "threads"};

Settings load_settings(const Inputs& in, const std::set<std::string>& extra_keys) {
    config::KeyValues kv;
    if (!in.config_path.empty()) {
        std::ifstream f(in.config_path);
        if (!f) throw ParameterError("cannot open config file '" + in.config_path + "'");
        kv = config::parse_key_values(f);
    }
    for (const auto& [k, v] : in.flags) kv[k] = v;
    for (const auto& [k, v] : kv) {
        if (!common_keys.contains(k) && !extra_keys.contains(k)) throw ParameterError("unknown setting '" + k + "'");
    }
    return Settings(std::move(kv));
}

unsigned worker_count(const Settings& s) {
    if (s.has("threads")) {
        const int n = s.integer("threads", 1);
        if (n < 1) throw ParameterError("threads must be >= 1");
        return static_cast<unsigned>(n);
    }
    if (const char* env = std::getenv("BLOCHRABI_THREADS")) {
        const double v = config::parse_number("BLOCHRABI_THREADS", env);
        if (v < 1 || v != std::floor(v)) throw ParameterError("BLOCHRABI_THREADS must be a positive integer");
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void add_flag(CLI::App* app, Inputs& in, const std::string& name, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(name, [&in, key](const std::string& v) { in.flags[key] = v; }, help);
}

void add_common(CLI::App* app, Inputs& in) {
    app->add_option("--config", in.config_path, "key=value configuration file");
    add_flag(app, in, "--preset", "preset", "named parameter set (v0_4)");
    add_flag(app, in, "--delta", "delta", "band gap");
    add_flag(app, in, "--tau-a", "tau_a", "lower-band hopping");
    add_flag(app, in, "--tau-b", "tau_b", "upper-band hopping");
    add_flag(app, in, "--c0", "c0", "coupling constant, V = c0 F");
    add_flag(app, in, "--force", "force", "Stark force F");
    add_flag(app, in, "-k,--k", "k", "quasimomentum");
    add_flag(app, in, "-o,--output", "output", "output file (default: stdout)");
    add_flag(app, in, "--format", "format", "csv or json");
    add_flag(app, in, "--steps-per-period", "steps_per_period", "integrator steps per Bloch period");
    add_flag(app, in, "--threads", "threads", "worker threads (default: BLOCHRABI_THREADS or all cores)");
}

io::HeaderEntries header_for(const std::string& command, const ModelParams& p, const Settings& s,
                             const io::HeaderEntries& extra) {
    io::HeaderEntries h{{"command", command}};
    if (s.has("preset")) h.emplace_back("preset", s.text("preset", ""));
    for (auto& e : io::param_echo(p)) h.push_back(std::move(e));
    for (const auto& e : extra) h.push_back(e);
    return h;
}

std::string output_format(const Settings& s) {
    const std::string f = s.text("format", "csv");
    if (f != "csv" && f != "json") throw ParameterError("format must be csv or json");
    return f;
}

void write_document(const Settings& s, const std::string& doc) {
    const std::string path = s.text("output", "");
    if (path.empty() || path == "-") {
        std::cout << doc;
        return;
    }
    std::ofstream f(path);
    if (!f) throw ParameterError("cannot open output file '" + path + "'");
    f << doc;
}

// The whole document is rendered before anything is written, so failures
// never leave partial output behind.
void emit(const Settings& s, const io::Table& table) {
    std::ostringstream doc;
    if (output_format(s) == "json") {
        io::write_json(doc, table);
    } else {
        io::write_csv(doc, table);
    }
    write_document(s, doc.str());
}

std::string fmt(double x) { return io::format_double(x); }

// ------------------------------------------------------------ subcommands

int cmd_params(const Inputs& in) {
    const Settings s = load_settings(in, {});
    const ModelParams p = config::resolve_params(s.values());
    io::HeaderEntries extra{{"k", fmt(s.number("k", 0.0))},
                            {"steps_per_period", std::to_string(s.integer("steps_per_period", 512))},
                            {"threads", std::to_string(worker_count(s))}};
    io::Table t{header_for("params", p, s, extra), {}, {}, {}};
    if (output_format(s) == "json") {
        emit(s, t);
    } else {
        std::ostringstream doc;
        for (const auto& [k, v] : t.header) doc << k << " = " << v << '\n';
        write_document(s, doc.str());
    }
    return exit_ok;
}

int cmd_bands(const Inputs& in) {
    const Settings s = load_settings(in, {"k_points"});
    const ModelParams p = config::resolve_params(s.values());
    const int n = s.integer("k_points", 201);
    if (n < 2) throw ParameterError("k_points must be >= 2");
    io::Table t{header_for("bands", p, s, {{"k_points", std::to_string(n)}}), {"k", "e_minus", "e_plus"}, {}, {}};
    for (const auto& b : band_structure(p, static_cast<std::size_t>(n))) t.rows.push_back({b.k, b.e_minus, b.e_plus});
    emit(s, t);
    return exit_ok;
}

int cmd_evolve(const Inputs& in) {
    const Settings s = load_settings(in, {"periods", "record_every", "frame", "richardson_tolerance"});
    const ModelParams p = config::resolve_params(s.values());
    const double k = s.number("k", 0.0);
    const double periods = s.number("periods", 100.0);
    if (!(periods > 0.0)) throw ParameterError("periods must be > 0");
    dynamics::PropagationControls c;
    c.steps_per_period = s.integer("steps_per_period", 512);
    c.record_every = s.integer("record_every", 8);
    const std::string frame = s.text("frame", "lab");
    if (frame == "interaction") {
        c.frame = dynamics::Frame::interaction;
    } else if (frame != "lab") {
        throw ParameterError("frame must be lab or interaction");
    }
    if (s.has("richardson_tolerance")) c.richardson_tolerance = s.number("richardson_tolerance", 0.0);

    const auto traj = dynamics::propagate(p, k, dynamics::TwoLevelState::lower_band(k), periods * p.bloch_period(), c);
    io::HeaderEntries extra{{"k", fmt(k)},
                            {"periods", fmt(periods)},
                            {"steps_per_period", std::to_string(c.steps_per_period)},
                            {"record_every", std::to_string(c.record_every)},
                            {"frame", frame},
                            {"max_norm_drift", fmt(traj.max_norm_drift)}};
    if (traj.richardson_error) extra.emplace_back("richardson_error", fmt(*traj.richardson_error));
    io::Table t{header_for("evolve", p, s, extra), {"t_over_TB", "upper_population"}, {}, {}};
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        t.rows.push_back({traj.times[i] / p.bloch_period(), traj.populations[i]});
    }
    emit(s, t);
    return exit_ok;
}

int cmd_scan(const Inputs& in) {
    const Settings s = load_settings(in, {"inv_force_min", "inv_force_max", "points", "horizon_periods",
                                          "prominence"});
    const ModelParams p = config::resolve_params(s.values());
    const double k = s.number("k", 0.0);
    const double lo = s.number("inv_force_min", 0.15);
    const double hi = s.number("inv_force_max", 0.75);
    const int points = s.integer("points", 400);
    const auto grid = config::uniform_grid(lo, hi, points);

    dynamics::ScanOptions opt;
    opt.controls.steps_per_period = s.integer("steps_per_period", 128);
    opt.threads = worker_count(s);
    if (s.has("horizon_periods")) opt.horizon_periods = s.number("horizon_periods", 0.0);
    const auto scan = dynamics::force_scan(p, k, grid, opt);

    resonance::PeakFitOptions fopt;
    fopt.prominence = s.number("prominence", fopt.prominence);
    io::HeaderEntries extra{{"k", fmt(k)},
                            {"inv_force_min", fmt(lo)},
                            {"inv_force_max", fmt(hi)},
                            {"points", std::to_string(points)},
                            {"steps_per_period", std::to_string(opt.controls.steps_per_period)},
                            {"horizon_periods", opt.horizon_periods ? fmt(*opt.horizon_periods) : "policy"},
                            {"prominence", fmt(fopt.prominence)}};
    io::Table t{header_for("scan", p, s, extra), {"inverse_force", "mean_population"}, {}, {}};
    for (const auto& pt : scan) {
        if (!pt.ok()) {
            std::cerr << "scan: 1/F = " << fmt(pt.inverse_force) << " failed: " << pt.error << '\n';
            t.rows.push_back({pt.inverse_force, std::numeric_limits<double>::quiet_NaN()});
            continue;
        }
        t.rows.push_back({pt.inverse_force, pt.mean_population});
    }
    for (const auto& f : resonance::fit_peaks(scan, fopt)) {
        std::string line = "peak center=" + fmt(f.center) + " half_width=" + fmt(f.half_width) +
                           " height=" + fmt(f.height) + " baseline=" + fmt(f.baseline) +
                           " residual=" + fmt(f.residual);
        if (!f.ok()) line += " error=\"" + f.error + "\"";
        t.trailer.push_back(line);
    }
    emit(s, t);
    return exit_ok;
}

std::vector<int> parse_orders(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const double v = config::parse_number("orders", config::trim(item));
        if (v < 1 || v != std::floor(v)) throw ParameterError("orders must be positive integers");
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw ParameterError("orders must not be empty");
    return out;
}

int cmd_restable(const Inputs& in) {
    const Settings s = load_settings(in, {"orders", "slow_periods", "width_points", "tolerance_m1",
                                          "tolerance_higher"});
    const ModelParams p = config::resolve_params(s.values());
    const double k = s.number("k", 0.0);
    const auto orders = parse_orders(s.text("orders", "1,2,3"));
    const int width_points = s.integer("width_points", 0);
    const double tol1 = s.number("tolerance_m1", 0.05);
    const double tol_hi = s.number("tolerance_higher", 0.03);
    resonance::MeasureOptions mopt;
    mopt.steps_per_period = s.integer("steps_per_period", mopt.steps_per_period);
    mopt.slow_periods = s.number("slow_periods", mopt.slow_periods);

    io::HeaderEntries extra{{"k", fmt(k)},
                            {"orders", s.text("orders", "1,2,3")},
                            {"steps_per_period", std::to_string(mopt.steps_per_period)},
                            {"slow_periods", fmt(mopt.slow_periods)},
                            {"width_points", std::to_string(width_points)},
                            {"tolerance_m1", fmt(tol1)},
                            {"tolerance_higher", fmt(tol_hi)}};
    io::Table t{header_for("restable", p, s, extra),
                {"m", "F_res", "T_res_pred_over_TB", "T_res_meas_over_TB", "rel_error", "Gamma_m", "width_fit"},
                {},
                {}};
    const double nan = std::numeric_limits<double>::quiet_NaN();
    bool exceeded = false;
    for (int m : orders) {
        try {
            const auto r = resonance::measure_resonance(p, m, k, mopt);
            const double gamma = resonance::predict(p.with_force(r.force), m).half_width;
            double width_fit = nan;
            if (width_points > 0) {
                const double x0 = 1.0 / r.force;
                const auto grid = config::uniform_grid(x0 - 5 * gamma, x0 + 5 * gamma, width_points);
                dynamics::ScanOptions opt;
                opt.threads = worker_count(s);
                const auto fits = resonance::fit_peaks(dynamics::force_scan(p, k, grid, opt));
                if (!fits.empty() && fits.front().ok()) width_fit = 2.0 * fits.front().half_width;
            }
            t.rows.push_back({static_cast<double>(m), r.force, r.predicted_period_tb, r.measured_period_tb,
                              r.relative_error, gamma, width_fit});
            if (r.relative_error > (m == 1 ? tol1 : tol_hi)) {
                exceeded = true;
                t.trailer.push_back("m=" + std::to_string(m) + ": relative error above tolerance");
            }
        } catch (const MeasurementError& e) {
            t.rows.push_back({static_cast<double>(m), nan, nan, nan, nan, nan, nan});
            t.trailer.push_back("m=" + std::to_string(m) + ": undefined (" + e.what() + ")");
        } catch (const DomainError& e) {
            t.rows.push_back({static_cast<double>(m), nan, nan, nan, nan, nan, nan});
            t.trailer.push_back("m=" + std::to_string(m) + ": undefined (" + e.what() + ")");
        }
    }
    emit(s, t);
    if (exceeded) throw CheckFailed("restable: relative error above tolerance");
    return exit_ok;
}

int cmd_floquet_check(const Inputs& in) {
    const Settings s = load_settings(in, {"order", "n_max", "half_width", "tolerance", "export_floquet",
                                          "export_transformed"});
    const ModelParams p = config::resolve_params(s.values());
    const int order = s.integer("order", 8);
    const int n_max = s.integer("n_max", 8);
    const int half_width = s.integer("half_width", order);
    const double tol = s.number("tolerance", 1e-12);
    if (order < 0 || half_width < 0 || n_max < 1) throw ParameterError("order, half_width >= 0 and n_max >= 1 required");

    const auto rep = lattice::compare_floquet_transformed(p, order, half_width, n_max);
    io::HeaderEntries extra{{"order", std::to_string(order)},
                            {"n_max", std::to_string(n_max)},
                            {"half_width", std::to_string(half_width)},
                            {"tolerance", fmt(tol)}};
    const io::HeaderEntries header = header_for("floquet-check", p, s, extra);
    io::Table t{header, {"max_deviation", "compared", "max_excluded_deviation", "excluded"}, {}, {}};
    t.rows.push_back({rep.max_deviation, static_cast<double>(rep.compared), rep.max_excluded_deviation,
                      static_cast<double>(rep.excluded)});
    t.trailer.push_back(rep.max_deviation <= tol ? "identity holds" : "identity violated");

    auto export_matrix = [&](const std::string& key, const Eigen::MatrixXd& m) {
        const std::string path = s.text(key, "");
        if (path.empty()) return;
        std::ofstream f(path);
        if (!f) throw ParameterError("cannot open '" + path + "'");
        io::write_dense_matrix(f, m, header);
    };
    export_matrix("export_floquet", lattice::build_floquet_matrix(p, order).matrix);
    export_matrix("export_transformed", lattice::build_transformed_hamiltonian(p, half_width, n_max));
    emit(s, t);
    if (rep.max_deviation > tol) throw CheckFailed("floquet-check: deviation above tolerance");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interband Rabi oscillations of Bloch-oscillating particles in a tilted two-band lattice"};
    app.require_subcommand(1);
    Inputs in;

    struct Command {
        const char* name;
        const char* help;
        int (*run)(const Inputs&);
        std::vector<std::pair<const char*, const char*>> options;
    };
    const std::vector<Command> commands{
        {"params", "echo the resolved configuration", cmd_params, {}},
        {"bands", "band energies over the Brillouin zone", cmd_bands, {{"--k-points", "k_points"}}},
        {"evolve", "upper-band population versus time", cmd_evolve,
         {{"--periods", "periods"}, {"--record-every", "record_every"}, {"--frame", "frame"},
          {"--richardson-tolerance", "richardson_tolerance"}}},
        {"scan", "long-time mean population versus 1/F with Lorentzian peak fits", cmd_scan,
         {{"--inv-force-min", "inv_force_min"}, {"--inv-force-max", "inv_force_max"}, {"--points", "points"},
          {"--horizon-periods", "horizon_periods"}, {"--prominence", "prominence"}}},
        {"restable", "measured versus predicted resonant periods", cmd_restable,
         {{"--orders", "orders"}, {"--slow-periods", "slow_periods"}, {"--width-points", "width_points"},
          {"--tolerance-m1", "tolerance_m1"}, {"--tolerance-higher", "tolerance_higher"}}},
        {"floquet-check", "Floquet matrix versus resonant-basis Hamiltonian", cmd_floquet_check,
         {{"--order", "order"}, {"--n-max", "n_max"}, {"--half-width", "half_width"}, {"--tolerance", "tolerance"},
          {"--export-floquet", "export_floquet"}, {"--export-transformed", "export_transformed"}}},
    };
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        CLI::App* sub = app.add_subcommand(c.name, c.help);
        add_common(sub, in);
        for (const auto& [flag, key] : c.options) add_flag(sub, in, flag, key, key);
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (subs[i]->parsed()) return commands[i].run(in);
        }
        return exit_usage;
    } catch (const CheckFailed& e) {
        std::cerr << e.what() << '\n';
        return exit_check;
    } catch (const ParameterError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const PreconditionError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return exit_numerical;
    }
}

// fluxcav command-line front end. Every subcommand reads one JSON config, writes
// CSV/JSON artifacts into the output directory and appends a line to run.log.

#include "fluxcav/fluxcav.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace fluxcav;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitVerify = 4;

constexpr const char* kUnits =
    "frequencies GHz unless a column suffix says otherwise (_mhz, _khz, _hz); times ns (_us: microseconds); "
    "flux in Phi0; loss rates 1/us";

struct Context {
    std::string command;
    json config = json::object();
    fs::path config_dir = ".";
    fs::path out_dir = "out";
    unsigned long long seed{0};
    int jobs{1};
    bool emit_plots{false};
    std::uint64_t config_hash{0};
    std::optional<DeviceFile> device;

    [[nodiscard]] json block(const char* name) const {
        return config.contains(name) ? config.at(name) : json::object();
    }
    [[nodiscard]] fs::path resolve(const std::string& p) const {
        const fs::path path(p);
        return (path.is_absolute() ? path : config_dir / path).lexically_normal();
    }
    [[nodiscard]] const DeviceFile& need_device() const {
        if (!device) throw ConfigError(command + ": config must name a device file");
        return *device;
    }

    [[nodiscard]] json header() const {
        std::ostringstream h;
        h << std::hex << std::setw(16) << std::setfill('0') << config_hash;
        return {{"tool", "fluxcav"},
                {"version", FLUXCAV_VERSION},
                {"command", command},
                {"config_hash", h.str()},
                {"seed", seed},
                {"units", kUnits}};
    }

    void write_csv(const std::string& name, const std::function<void(std::ostream&)>& body) const {
        std::ostringstream os;
        const json h = header();
        for (const auto& [k, v] : h.items()) os << "# " << k << ": " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
        body(os);
        write_file(name, os.str());
    }
    void write_json(const std::string& name, json payload) const {
        payload["header"] = header();
        write_file(name, payload.dump(2) + "\n");
    }
    void write_file(const std::string& name, const std::string& content) const {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / name, std::ios::binary);
        if (!f) throw Error("cannot write " + (out_dir / name).string());
        f << content;
        std::cout << (out_dir / name).string() << '\n';
    }
    // gnuplot script next to a CSV; '#' header lines are comments to gnuplot.
    void plot(const std::string& csv, const std::string& body) const {
        if (!emit_plots) return;
        std::ostringstream os;
        os << "set datafile separator ','\nset key autotitle columnhead\n"
           << "set terminal pngcairo size 900,600\nset output '" << fs::path(csv).stem().string() << ".png'\n"
           << body << '\n';
        write_file(fs::path(csv).stem().string() + ".gp", os.str());
    }
    void log(const std::string& msg) const {
        fs::create_directories(out_dir);
        std::ofstream f(out_dir / "run.log", std::ios::app);
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        f << std::put_time(std::gmtime(&now), "%Y-%m-%dT%H:%M:%SZ") << ' ' << command << ": " << msg << '\n';
    }
};

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw ConfigError("grid must have at least one point");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return v;
}

std::vector<double> grid_from(const json& b, const char* lo, const char* hi, const char* pts, double dlo, double dhi,
                              int dpts, const std::string& where) {
    return linspace(io::get_or<double>(b, lo, dlo, where), io::get_or<double>(b, hi, dhi, where),
                    io::get_or<int>(b, pts, dpts, where));
}

std::vector<double> times_from(const json& b, const char* key, const std::vector<double>& fallback,
                               const std::string& where) {
    if (!b.contains(key)) return fallback;
    if (!b.at(key).is_array() || b.at(key).empty()) throw ConfigError(where + "." + key + ": expected a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < b.at(key).size(); ++i) {
        json tmp = {{"v", b.at(key)[i]}};
        out.push_back(io::get_time(tmp, "v", where + "." + key));
    }
    return out;
}

// ------------------------------------------------------------ state and grid blocks

struct StorageStateSpec {
    std::string kind{"vacuum"};
    cplx alpha{0.0};
    int n{0};
    int fock_dim{20};
};

StorageStateSpec state_from(const json& b, const std::string& where) {
    io::check_keys(b, {"kind", "alpha_re", "alpha_im", "n", "fock_dim"}, where);
    StorageStateSpec s;
    s.kind = io::get_or<std::string>(b, "kind", "vacuum", where);
    s.alpha = {io::get_or<double>(b, "alpha_re", 0.0, where), io::get_or<double>(b, "alpha_im", 0.0, where)};
    s.n = io::get_or<int>(b, "n", 0, where);
    s.fock_dim = io::get_or<int>(b, "fock_dim", 20, where);
    if (s.fock_dim < 2) throw ConfigError(where + ".fock_dim must be >= 2");
    return s;
}

VectorC storage_ket_of(const StorageStateSpec& s) {
    VectorC v = VectorC::Zero(s.fock_dim);
    if (s.kind == "vacuum") {
        v(0) = 1.0;
    } else if (s.kind == "fock") {
        if (s.n < 0 || s.n >= s.fock_dim) throw ConfigError("state.n outside the Fock truncation");
        v(s.n) = 1.0;
    } else if (s.kind == "coherent") {
        v = displacement(s.alpha, s.fock_dim).col(0);
    } else if (s.kind == "cat") {
        v = displacement(s.alpha, s.fock_dim).col(0) + displacement(-s.alpha, s.fock_dim).col(0);
        v.normalize();
    } else {
        throw ConfigError("state.kind must be vacuum, fock, coherent or cat (got '" + s.kind + "')");
    }
    return v;
}

PhaseSpaceGrid grid_block(const json& b, const std::string& where) {
    io::check_keys(b, {"re_min", "re_max", "im_min", "im_max", "resolution"}, where);
    PhaseSpaceGrid g;
    g.re_min = io::get_or<double>(b, "re_min", -3.0, where);
    g.re_max = io::get_or<double>(b, "re_max", 3.0, where);
    g.im_min = io::get_or<double>(b, "im_min", -3.0, where);
    g.im_max = io::get_or<double>(b, "im_max", 3.0, where);
    g.resolution = io::get_or<int>(b, "resolution", 61, where);
    try {
        g.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    return g;
}

const char* kGridPlot = "set view map\nset datafile separator ','\nplot '%s' matrix nonuniform with image";

std::string grid_plot(const std::string& csv) {
    char buf[256];
    std::snprintf(buf, sizeof buf, kGridPlot, csv.c_str());
    return buf;
}

// ------------------------------------------------------------ commands

int cmd_spectrum(const Context& ctx) {
    const json b = ctx.block("spectrum");
    const std::string w = "spectrum";
    io::check_keys(b, {"flux_min", "flux_max", "points"}, w);
    const auto grid = grid_from(b, "flux_min", "flux_max", "points", 0.0, 1.0, 101, w);
    FluxSweepOptions opt;
    opt.jobs = ctx.jobs;
    opt.margin_points = 0;
    const auto r = flux_sweep(ctx.need_device().circuit, grid, opt);
    ctx.write_csv("spectrum.csv", [&](std::ostream& os) {
        os << "flux_phi0,ge_mhz,gf_mhz,gh_mhz,storage_mhz,overlap\n";
        os.precision(12);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            os << grid[i];
            for (double t : r.transitions[i]) os << ',' << units::to_mhz(t);
            os << ',' << units::to_mhz(r.params[i].omega_storage) << ',' << r.params[i].hybridization_overlap << '\n';
        }
    });
    ctx.plot("spectrum.csv", "plot for [c=2:4] 'spectrum.csv' using 1:c with lines");
    for (const auto& wmsg : r.warnings) ctx.log(wmsg);
    return 0;
}

int cmd_chikerr(const Context& ctx) {
    const json b = ctx.block("chikerr");
    const std::string w = "chikerr";
    io::check_keys(b, {"flux_min", "flux_max", "points", "max_p", "margin_points"}, w);
    const auto grid = grid_from(b, "flux_min", "flux_max", "points", 0.40, 0.50, 41, w);
    FluxSweepOptions opt;
    opt.jobs = ctx.jobs;
    opt.max_p = io::get_or<int>(b, "max_p", 2, w);
    opt.margin_points = io::get_or<int>(b, "margin_points", 3, w);
    if (opt.max_p < 2) throw ConfigError(w + ".max_p must be >= 2");
    const auto r = flux_sweep(ctx.need_device().circuit, grid, opt);
    ctx.write_csv("chikerr.csv", [&](std::ostream& os) { write_flux_sweep_csv(os, r); });
    std::vector<double> k, chi;
    for (const auto& p : r.params) {
        k.push_back(p.kerr);
        chi.push_back(p.chi);
    }
    json summary;
    summary["kerr_zero_crossings_phi0"] = zero_crossings(grid, k);
    summary["chi_zero_crossings_phi0"] = zero_crossings(grid, chi);
    summary["warnings"] = r.warnings;
    double worst = 0.0;
    for (double m : r.convergence_margin)
        if (std::isfinite(m)) worst = std::max(worst, m);
    summary["max_convergence_margin"] = worst;
    ctx.write_json("chikerr.json", summary);
    ctx.plot("chikerr.csv", "set y2tics\nplot 'chikerr.csv' using 1:4 with lines, '' using 1:5 axes x1y2 with lines");
    return 0;
}

int cmd_ramsey(const Context& ctx) {
    const json b = ctx.block("ramsey");
    const std::string w = "ramsey";
    io::check_keys(b, {"alphas", "detuning_mhz", "kerr_khz", "t_max_ns", "dt_ns", "fock_dim", "model", "shots",
                       "selective_pulse_ns", "min_nbar"},
                   w);
    std::vector<double> alphas = io::get_or<std::vector<double>>(b, "alphas", {0.5, 1.0, 1.5, 2.0, 2.5}, w);
    if (alphas.empty()) throw ConfigError(w + ".alphas is empty");
    double kerr;
    if (b.contains("kerr_khz")) kerr = io::get<double>(b, "kerr_khz", w) * units::kKHz;
    else kerr = ctx.need_device().measured_model(2).kerr;
    const double det = io::get_or<double>(b, "detuning_mhz", 10.0, w) * units::kMHz;
    const double t_max = io::get_or<double>(b, "t_max_ns", 500.0, w);
    const double dt = io::get_or<double>(b, "dt_ns", 0.5, w);
    if (!(t_max > 0.0 && dt > 0.0)) throw ConfigError(w + ": t_max_ns and dt_ns must be positive");
    const auto model = io::get_or<std::string>(b, "model", "unitary", w);
    const int shots = io::get_or<int>(b, "shots", 0, w);
    if (model != "unitary" && model != "master") throw ConfigError(w + ".model must be unitary or master");

    RamseyConfig cfg;
    cfg.detuning = det;
    cfg.kerr = kerr;
    cfg.fock_dim = io::get_or<int>(b, "fock_dim", 40, w);
    for (double t = 0.0; t <= t_max + 1e-9; t += dt) cfg.t_grid.push_back(t);
    std::vector<RamseyDataset> data;
    std::mt19937_64 rng(ctx.seed);
    for (double a : alphas) {
        cfg.alpha = a;
        RamseySeries s;
        if (model == "unitary") {
            s = cavity_ramsey_unitary(cfg);
        } else {
            const auto& dev = ctx.need_device();
            cfg.chi = dev.measured_model(2).chi;
            if (dev.losses) {
                cfg.losses = dev.losses->rates();
                cfg.qubit_ground_population = dev.losses->ground_population;
            }
            const double tp = io::get_or<double>(b, "selective_pulse_ns", 1600.0, w);
            s = cavity_ramsey_master(cfg, qubit_pulse(PulseShape::gaussian, tp, 0.0, 0.0, kPi), {}, ctx.jobs);
        }
        if (shots > 0) {
            for (double& p : s.p) {
                std::binomial_distribution<int> draw(shots, std::clamp(p, 0.0, 1.0));
                p = static_cast<double>(draw(rng)) / shots;
            }
        }
        data.push_back({a, s});
    }
    ctx.write_csv("ramsey.csv", [&](std::ostream& os) {
        os << "alpha,t_ns,p\n";
        os.precision(12);
        for (const auto& d : data)
            for (std::size_t i = 0; i < d.series.t.size(); ++i)
                os << d.alpha.real() << ',' << d.series.t[i] << ',' << d.series.p[i] << '\n';
    });
    json summary;
    summary["kerr_in_khz"] = units::to_khz(kerr);
    summary["detuning_mhz"] = units::to_mhz(det);
    try {
        const auto fit = extract_kerr_from_ramsey(data, io::get_or<double>(b, "min_nbar", 1.0, w));
        summary["kerr_fit_khz"] = units::to_khz(fit.kerr);
        summary["detuning_fit_mhz"] = units::to_mhz(fit.detuning_offset);
        summary["nbar"] = fit.nbar;
        std::vector<double> f_mhz;
        for (double f : fit.frequency) f_mhz.push_back(units::to_mhz(f));
        summary["fringe_mhz"] = f_mhz;
        summary["excluded"] = fit.excluded;
    } catch (const OptimizationFailure& e) {
        summary["fit_error"] = e.what();
        ctx.write_json("ramsey.json", summary);
        throw;
    }
    ctx.write_json("ramsey.json", summary);
    ctx.plot("ramsey.csv", "plot 'ramsey.csv' using 2:3:1 with lines palette");
    return 0;
}

MatrixC prepared_storage(const Context& ctx, const json& b, const std::string& w, StorageStateSpec& st) {
    st = state_from(b.contains("state") ? b.at("state") : json::object(), w + ".state");
    const VectorC psi = storage_ket_of(st);
    MatrixC rho = psi * psi.adjoint();
    const double t = io::get_or<double>(b, "evolve_ns", 0.0, w);
    if (t > 0.0) {
        const auto& dev = ctx.need_device();
        const EffectiveModel model = dev.measured_model(st.fock_dim);
        const LossRates losses = dev.losses ? dev.losses->rates() : LossRates{};
        MatrixC full = MatrixC::Zero(2 * st.fock_dim, 2 * st.fock_dim);
        full.topLeftCorner(st.fock_dim, st.fock_dim) = rho;
        rho = evolve_to(DensityMatrix(full, st.fock_dim), model, {}, losses, 0.0, t).storage_state();
    }
    return rho;
}

int cmd_qfunc(const Context& ctx) {
    const json b = ctx.block("qfunc");
    const std::string w = "qfunc";
    io::check_keys(b, {"state", "grid", "evolve_ns"}, w);
    StorageStateSpec st;
    const MatrixC rho = prepared_storage(ctx, b, w, st);
    const auto g = q_function(rho, grid_block(b.contains("grid") ? b.at("grid") : json::object(), w + ".grid"));
    ctx.write_csv("qfunc.csv", [&](std::ostream& os) { write_grid_csv(os, g); });
    ctx.write_json("qfunc.json", {{"integral", g.integral()}, {"max", g.values.maxCoeff()}});
    ctx.plot("qfunc.csv", grid_plot("qfunc.csv"));
    return 0;
}

int cmd_wigner(const Context& ctx) {
    const json b = ctx.block("wigner");
    const std::string w = "wigner";
    io::check_keys(b, {"state", "grid", "evolve_ns", "method", "duration_ns", "max_peak", "lossless"}, w);
    StorageStateSpec st;
    const MatrixC rho = prepared_storage(ctx, b, w, st);
    const PhaseSpaceGrid grid = grid_block(b.contains("grid") ? b.at("grid") : json::object(), w + ".grid");
    const auto method = io::get_or<std::string>(b, "method", "exact", w);
    json summary;
    PhaseSpaceGrid g;
    if (method == "exact") {
        g = wigner_exact(rho, grid);
    } else if (method == "measured") {
        const auto& dev = ctx.need_device();
        const EffectiveModel model = dev.measured_model(st.fock_dim);
        const bool lossless = io::get_or<bool>(b, "lossless", false, w);
        const LossRates losses = (dev.losses && !lossless) ? dev.losses->rates() : LossRates{};
        WignerMeasurement cfg;
        cfg.duration = io::get_or<double>(b, "duration_ns", 1600.0, w);
        cfg.max_peak = io::get_or<int>(b, "max_peak", std::min(10, st.fock_dim - 1), w);
        cfg.jobs = ctx.jobs;
        if (dev.losses && !lossless) cfg.qubit_ground_population = dev.losses->ground_population;
        const auto m = wigner_measured(rho, model, losses, cfg, grid);
        g = m.grid;
        summary["max_tail"] = m.max_tail;
    } else {
        throw ConfigError(w + ".method must be exact or measured");
    }
    ctx.write_csv("wigner.csv", [&](std::ostream& os) { write_grid_csv(os, g); });
    summary["integral"] = g.integral();
    summary["max"] = g.values.maxCoeff();
    summary["min"] = g.values.minCoeff();
    ctx.write_json("wigner.json", summary);
    ctx.plot("wigner.csv", grid_plot("wigner.csv"));
    return 0;
}

int cmd_rabi(const Context& ctx) {
    const json b = ctx.block("rabi");
    const std::string w = "rabi";
    io::check_keys(b, {"peak", "alpha_re", "alpha_im", "amp_min", "amp_max", "points", "duration_ns", "fock_dim",
                       "lossless"},
                   w);
    const auto& dev = ctx.need_device();
    const int fock = io::get_or<int>(b, "fock_dim", 20, w);
    const EffectiveModel model = dev.measured_model(fock);
    const bool lossless = io::get_or<bool>(b, "lossless", false, w);
    const LossRates losses = (dev.losses && !lossless) ? dev.losses->rates() : LossRates{};
    const double pg = (dev.losses && !lossless) ? dev.losses->ground_population : 1.0;
    const auto amps = grid_from(b, "amp_min", "amp_max", "points", 0.0, 2.0, 41, w);
    const cplx alpha{io::get_or<double>(b, "alpha_re", 1.0, w), io::get_or<double>(b, "alpha_im", 0.0, w)};
    const int peak = io::get_or<int>(b, "peak", 0, w);
    const auto pe = power_rabi_curve(peak, alpha, model, losses, amps, io::get_or<double>(b, "duration_ns", 1600.0, w),
                                     pg, {}, ctx.jobs);
    ctx.write_csv("rabi.csv", [&](std::ostream& os) { write_series_csv(os, "amplitude", amps, "p_e", pe); });
    ctx.plot("rabi.csv", "plot 'rabi.csv' using 1:2 with linespoints");
    return 0;
}

VectorC snap_target(const std::string& name, int dim) {
    VectorC v = VectorC::Zero(dim);
    if (name == "fock1") {
        v(1) = 1.0;
    } else if (name == "minus") {
        v(0) = 1.0 / std::sqrt(2.0);
        v(1) = -1.0 / std::sqrt(2.0);
    } else if (name == "plus") {
        v(0) = v(1) = 1.0 / std::sqrt(2.0);
    } else {
        throw ConfigError("snap target must be fock1, minus or plus (got '" + name + "')");
    }
    return v;
}

struct SnapSetup {
    std::vector<double> theta;
    EffectiveModel model;
    SnapOptions opt;
    double t_slow{1600.0}, t_fast{40.0};
};

SnapSetup snap_setup(const Context& ctx, const json& b, const std::string& w) {
    SnapSetup s;
    const int levels = io::get_or<int>(b, "levels", 8, w);
    if (levels < 1) throw ConfigError(w + ".levels must be >= 1");
    s.theta.assign(static_cast<std::size_t>(levels), 0.0);
    s.theta[0] = kPi;
    if (b.contains("theta")) s.theta = io::get<std::vector<double>>(b, "theta", w);
    s.model = ctx.need_device().measured_model(io::get_or<int>(b, "fock_dim", 20, w));
    s.t_slow = io::get_or<double>(b, "t_slow_ns", 1600.0, w);
    s.t_fast = io::get_or<double>(b, "t_fast_ns", 40.0, w);
    s.opt.include_fast = io::get_or<bool>(b, "include_fast", true, w);
    s.opt.max_evals = io::get_or<int>(b, "max_evals", 6000, w);
    return s;
}

json budget_json(const ErrorBudget& bud) {
    json j;
    j["intrinsic"] = bud.intrinsic;
    j["total"] = bud.total;
    j["fidelity"] = 1.0 - bud.total;
    j["loss_free_error"] = bud.loss_free;
    for (const auto& [k, v] : bud.per_channel) j["per_channel"][k] = v;
    for (const auto& [k, v] : bud.raw) j["raw"][k] = v;
    return j;
}

int cmd_snap(const Context& ctx) {
    const json b = ctx.block("snap");
    const std::string w = "snap";
    io::check_keys(b, {"targets", "levels", "theta", "fock_dim", "t_slow_ns", "t_fast_ns", "include_fast",
                       "max_evals", "ground_population"},
                   w);
    const auto s = snap_setup(ctx, b, w);
    const auto& dev = ctx.need_device();
    const LossRates losses = dev.losses ? dev.losses->rates() : LossRates{};
    InitialState init;
    init.qubit_ground_population = io::get_or<double>(b, "ground_population", 0.9, w);
    const auto targets = io::get_or<std::vector<std::string>>(b, "targets", {"fock1", "minus"}, w);
    json out;
    bool failed = false;
    for (const auto& name : targets) {
        const VectorC target = snap_target(name, s.model.fock_dim);
        const auto [a1, a2] = optimize_displacements(s.theta, target);
        const auto opt = optimize_snap(s.theta, coherent_weights(a1, static_cast<int>(s.theta.size())), s.model, s.t_slow,
                                       s.t_fast, s.opt);
        SnapSpec spec = opt.spec;
        spec.alpha1 = a1;
        spec.alpha2 = a2;
        const auto bud = error_budget(spec, s.model, losses, init, target, {}, ctx.jobs);
        json j = budget_json(bud);
        j["alpha1"] = a1;
        j["alpha2"] = a2;
        j["selective_infidelity"] = opt.infidelity;
        j["nominal_selective_infidelity"] = opt.nominal_infidelity;
        j["optimizer_converged"] = opt.converged;
        if (!opt.note.empty()) j["note"] = opt.note;
        for (const auto& d : spec.selective)
            j["pulses"].push_back({{"lambda_ghz", d.lambda}, {"omega_ghz", d.omega}, {"phase_rad", d.phase}});
        out["targets"][name] = j;
        failed = failed || !opt.converged;
    }
    ctx.write_json("snap.json", out);
    if (failed) {
        ctx.log("selective pulse optimization did not reach its threshold");
        return kExitNumerical;
    }
    return 0;
}

int cmd_errormap(const Context& ctx) {
    const json b = ctx.block("errormap");
    const std::string w = "errormap";
    io::check_keys(b, {"t1_storage_us", "tphi_us", "levels", "theta", "fock_dim", "t_slow_ns", "t_fast_ns", "alpha1",
                       "max_evals"},
                   w);
    const double inf = std::numeric_limits<double>::infinity();
    const auto t1s = times_from(b, "t1_storage_us", {12.0, 100.0, 1000.0, inf}, w);
    const auto tphi = times_from(b, "tphi_us", {16.0, 50.0, 200.0, inf}, w);
    json sb = b;
    for (const char* k : {"t1_storage_us", "tphi_us", "alpha1"}) sb.erase(k);
    const auto s = snap_setup(ctx, sb, w);
    const double a1 = io::get_or<double>(b, "alpha1", 1.0, w);
    const auto opt = optimize_snap(s.theta, coherent_weights(a1, static_cast<int>(s.theta.size())), s.model, s.t_slow,
                                   s.t_fast, s.opt);
    SnapSpec spec = opt.spec;
    spec.alpha1 = a1;
    const MatrixR m = incoherent_error_map(spec, s.model, t1s, tphi, {}, ctx.jobs);
    ctx.write_csv("errormap.csv", [&](std::ostream& os) {
        os.precision(12);
        os << "t1_storage_us\\tphi_us";
        for (double t : tphi) os << ',' << t;
        os << '\n';
        for (std::size_t i = 0; i < t1s.size(); ++i) {
            os << t1s[i];
            for (std::size_t j = 0; j < tphi.size(); ++j) os << ',' << m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            os << '\n';
        }
    });
    ctx.write_json("errormap.json", {{"selective_infidelity", opt.infidelity}, {"alpha1", a1}});
    return 0;
}

int cmd_bound(const Context& ctx) {
    const json b = ctx.block("bound");
    const std::string w = "bound";
    io::check_keys(b, {"literature", "e_c_max_ghz", "chi_min_mhz", "chi_max_mhz", "points"}, w);
    const fs::path lit = b.contains("literature") ? ctx.resolve(io::get<std::string>(b, "literature", w))
                                                  : fs::path(FLUXCAV_DATA_DIR) / "transmon_literature.csv";
    std::ifstream is(lit);
    if (!is) throw ConfigError("cannot open literature table '" + lit.string() + "'");
    const double e_c_max = io::get_or<double>(b, "e_c_max_ghz", 0.530, w);
    const auto checks = check_literature(read_literature_csv(is), e_c_max);
    const int n = io::get_or<int>(b, "points", 61, w);
    const double lo = std::log10(io::get_or<double>(b, "chi_min_mhz", 0.01, w));
    const double hi = std::log10(io::get_or<double>(b, "chi_max_mhz", 10.0, w));
    std::vector<double> chi;
    for (double e : linspace(lo, hi, n)) chi.push_back(std::pow(10.0, e) * units::kMHz);
    const auto curve = bound_curve(chi, e_c_max);
    ctx.write_csv("bound.csv", [&](std::ostream& os) {
        os.precision(12);
        os << "chi_mhz,k_min_khz\n";
        for (std::size_t i = 0; i < chi.size(); ++i)
            os << units::to_mhz(curve.chi_grid[i]) << ',' << units::to_khz(curve.k_min[i]) << '\n';
    });
    int pass = 0;
    ctx.write_csv("literature_check.csv", [&](std::ostream& os) {
        os.precision(12);
        os << "citation,k_type,chi_abs_mhz,k_abs_khz,bound_khz,pass\n";
        for (const auto& c : checks) {
            os << c.entry.citation << ',' << (c.entry.k_type == KerrSource::data ? "data" : "simulation") << ','
               << c.entry.chi_abs << ',' << c.entry.k_abs << ',' << c.bound_khz << ',' << (c.pass ? 1 : 0) << '\n';
            pass += c.pass ? 1 : 0;
        }
    });
    ctx.write_json("bound.json", {{"pass", pass},
                                  {"total", checks.size()},
                                  {"e_c_max_ghz", e_c_max},
                                  {"bound_at_1mhz_khz", units::to_khz(transmon_bound(units::kMHz, e_c_max))}});
    ctx.plot("bound.csv", "set logscale xy\nplot 'bound.csv' using 1:2 with lines, 'literature_check.csv' using 3:4 with points");
    return 0;
}

int cmd_optimize(const Context& ctx) {
    const json b = ctx.block("optimize");
    const std::string w = "optimize";
    io::check_keys(b, {"chi_target_mhz", "overlap_min", "max_evals", "delta_min_ghz", "delta_max_ghz", "points",
                       "search", "delta_convention"},
                   w);
    const auto& dev = ctx.need_device();
    const double chi_t = io::get_or<double>(b, "chi_target_mhz", 1.0, w) * units::kMHz;
    const double ov_min = io::get_or<double>(b, "overlap_min", 0.99, w);
    const auto deltas = grid_from(b, "delta_min_ghz", "delta_max_ghz", "points", -4.0, 0.0, 33, w);
    FixedChiOptions fopt;
    fopt.jobs = ctx.jobs;
    const auto conv = io::get_or<std::string>(b, "delta_convention", "dressed", w);
    if (conv == "bare") fopt.convention = DeltaConvention::bare;
    else if (conv != "dressed") throw ConfigError(w + ".delta_convention must be 'dressed' or 'bare'");
    const auto sweep = sweep_fixed_chi(dev.circuit, deltas, chi_t, fopt);
    ctx.write_csv("fixed_chi.csv", [&](std::ostream& os) { write_fixed_chi_csv(os, sweep); });
    std::vector<double> k;
    for (const auto& p : sweep) k.push_back(p.ok ? p.kerr : 0.0);
    json summary;
    summary["delta_convention"] = conv;
    summary["kerr_zero_crossings_delta_ghz"] = zero_crossings(deltas, k);
    if (dev.circuit.is_fluxonium()) {
        DesignSearchSpace space;
        if (b.contains("search")) {
            const json& s = b.at("search");
            io::check_keys(s, {"e_c_ghz", "e_l_ghz", "e_j_ghz", "cavity_ghz", "g_ghz"}, w + ".search");
            auto bounds = [&](const char* key, Bounds& out) {
                if (!s.contains(key)) return;
                const auto v = io::get<std::vector<double>>(s, key, w + ".search");
                if (v.size() != 2 || !(v[0] < v[1])) throw ConfigError(w + ".search." + key + " must be [lo, hi]");
                out = {v[0], v[1]};
            };
            bounds("e_c_ghz", space.e_c);
            bounds("e_l_ghz", space.e_l);
            bounds("e_j_ghz", space.e_j);
            bounds("cavity_ghz", space.cavity_freq);
            bounds("g_ghz", space.g);
        }
        DesignOptions opt;
        opt.max_evals = io::get_or<int>(b, "max_evals", 400, w);
        opt.seed = static_cast<unsigned>(ctx.seed);
        const auto r = optimize_zero_kerr(dev.circuit, space, chi_t, ov_min, opt);
        json d;
        d["circuit"] = circuit_to_json(r.params);
        d["chi_mhz"] = units::to_mhz(r.chi);
        d["kerr_hz"] = units::to_hz(r.kerr);
        d["overlap"] = r.overlap;
        d["converged"] = r.converged;
        d["evals"] = r.evals;
        d["transmon_bound_khz"] = units::to_khz(transmon_bound(chi_t));
        for (const auto& [p, kp] : r.kerr_higher) d["kerr_higher_hz"][std::to_string(p)] = units::to_hz(kp);
        if (!r.note.empty()) d["note"] = r.note;
        summary["design"] = d;
        ctx.write_json("optimize.json", summary);
        if (!r.converged) return kExitNumerical;
        return 0;
    }
    ctx.write_json("optimize.json", summary);
    return 0;
}

// Quick regression fixtures against the shipped device files.
int cmd_verify(const Context& ctx) {
    struct Check {
        std::string name;
        double value, target, tol;  // relative tolerance
    };
    std::vector<Check> checks;
    const fs::path data(FLUXCAV_DATA_DIR);
    for (const char* dev_name : {"device_a.json", "device_b.json"}) {
        const auto dev = read_device((data / dev_name).string());
        const auto p = effective_params(dev.circuit);
        const auto& m = *dev.measured;
        // Device B's qubit frequency is not a regression target.
        if (dev.name == "device_a") checks.push_back({dev.name + " Omega", p.omega_qubit, m.omega_qubit, 0.01});
        checks.push_back({dev.name + " chi", p.chi, m.chi, 0.10});
        checks.push_back({dev.name + " K", p.kerr, m.kerr, 0.20});
    }
    std::ifstream is(data / "transmon_literature.csv");
    const auto lit = check_literature(read_literature_csv(is));
    double pass = 0.0;
    for (const auto& c : lit) pass += c.pass ? 1.0 : 0.0;
    checks.push_back({"literature points above transmon bound", pass, static_cast<double>(lit.size()), 0.0});
    PhaseSpaceGrid origin;
    origin.re_min = origin.im_min = -1.0;
    origin.re_max = origin.im_max = 1.0;
    origin.resolution = 3;
    MatrixC vac = MatrixC::Zero(10, 10);
    vac(0, 0) = 1.0;
    checks.push_back({"vacuum W(0)", wigner_exact(vac, origin).values(1, 1), 2.0 / kPi, 1e-6});

    json out;
    bool ok = true;
    for (const auto& c : checks) {
        const bool pass_c = std::abs(c.value - c.target) <= c.tol * std::abs(c.target);
        ok = ok && pass_c;
        std::cout << (pass_c ? "PASS " : "FAIL ") << c.name << ": " << c.value << " (target " << c.target << " +/- "
                  << c.tol * 100 << "%)\n";
        out["checks"].push_back({{"name", c.name}, {"value", c.value}, {"target", c.target}, {"pass", pass_c}});
    }
    out["pass"] = ok;
    ctx.write_json("verify.json", out);
    return ok ? 0 : kExitVerify;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fluxcav: fluxonium-cavity simulator and design tool"};
    app.set_version_flag("--version", FLUXCAV_VERSION);
    std::string config_path, out_flag;
    std::optional<unsigned long long> seed_flag;
    std::optional<int> jobs_flag;
    bool emit_plots = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_flag, "output directory (overrides FLUXCAV_OUT and the config)");
    app.add_option("--seed", seed_flag, "random seed recorded in every output");
    app.add_option("--jobs", jobs_flag, "worker threads (0 = all cores)");
    app.add_flag("--emit-plots", emit_plots, "write gnuplot scripts next to the CSV files");
    app.require_subcommand(1);

    const std::map<std::string, std::function<int(const Context&)>> commands{
        {"spectrum", cmd_spectrum}, {"chikerr", cmd_chikerr}, {"ramsey", cmd_ramsey},     {"qfunc", cmd_qfunc},
        {"wigner", cmd_wigner},     {"rabi", cmd_rabi},       {"snap", cmd_snap},         {"errormap", cmd_errormap},
        {"bound", cmd_bound},       {"optimize", cmd_optimize}, {"verify", cmd_verify}};
    const std::map<std::string, std::string> help{
        {"spectrum", "qubit transition frequencies versus flux"},
        {"chikerr", "chi, K and higher K_p versus flux"},
        {"ramsey", "cavity Ramsey fringes and Kerr extraction"},
        {"qfunc", "Husimi Q function of a storage state"},
        {"wigner", "Wigner function, exact or by simulated parity measurement"},
        {"rabi", "photon-number-selective power Rabi"},
        {"snap", "SNAP state preparation with error budget"},
        {"errormap", "incoherent SNAP error versus storage T1 and qubit dephasing"},
        {"bound", "transmon chi/K bound and literature check"},
        {"optimize", "fixed-chi detuning sweep and zero-Kerr fluxonium search"},
        {"verify", "regression checks against the shipped devices"}};
    for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    Context ctx;
    ctx.command = app.get_subcommands().front()->get_name();
    try {
        if (!config_path.empty()) {
            ctx.config = io::read_json_file(config_path);
            ctx.config_dir = fs::path(config_path).parent_path();
            if (ctx.config_dir.empty()) ctx.config_dir = ".";
        }
        io::check_keys(ctx.config,
                       {"device", "seed", "jobs", "output_dir", "spectrum", "chikerr", "ramsey", "qfunc", "wigner",
                        "rabi", "snap", "errormap", "bound", "optimize"},
                       "config");
        json hashed = ctx.config;
        if (ctx.config.contains("device")) {
            const fs::path dp = ctx.resolve(io::get<std::string>(ctx.config, "device", "config"));
            const json dj = io::read_json_file(dp.string());
            ctx.device = device_from_json(dj);
            hashed["device"] = dj;
        }
        ctx.seed = seed_flag.value_or(io::get_or<unsigned long long>(ctx.config, "seed", 0ULL, "config"));
        ctx.jobs = jobs_flag.value_or(io::get_or<int>(ctx.config, "jobs", 1, "config"));
        if (ctx.jobs <= 0) ctx.jobs = default_jobs();
        hashed["seed"] = ctx.seed;
        hashed.erase("jobs");
        hashed["command"] = ctx.command;
        ctx.config_hash = io::hash(hashed);
        ctx.emit_plots = emit_plots;
        if (!out_flag.empty()) ctx.out_dir = out_flag;
        else if (const char* env = std::getenv("FLUXCAV_OUT"); env && *env) ctx.out_dir = env;
        else if (ctx.config.contains("output_dir"))
            ctx.out_dir = ctx.resolve(io::get<std::string>(ctx.config, "output_dir", "config"));

        const auto t0 = std::chrono::steady_clock::now();
        const int rc = commands.at(ctx.command)(ctx);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        ctx.log("finished with exit code " + std::to_string(rc) + " in " + std::to_string(secs) + " s");
        return rc;
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        try {
            ctx.log(std::string("numerical failure: ") + e.what());
        } catch (...) {
        }
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}

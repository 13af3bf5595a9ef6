// bosonic.hpp: storage-mode protocols: number-split spectroscopy, displacement
// calibration, cavity Ramsey and Kerr extraction, measured Wigner tomography and
// selective power Rabi.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/lindblad.hpp"
#include "fluxcav/optimize.hpp"
#include "fluxcav/parallel.hpp"
#include "fluxcav/phase_space.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fluxcav {

// ------------------------------------------------------------ spectroscopy

// Poisson-weighted Lorentzians at n * chi (frame-relative); `linewidth` is the FWHM.
struct SpectrumModel {
    std::vector<double> peak_centers;
    std::vector<double> weights;
    double linewidth{0.0};

    [[nodiscard]] double operator()(double detuning) const {
        const double hw2 = 0.25 * linewidth * linewidth;
        double acc = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            const double d = detuning - peak_centers[k];
            acc += weights[k] * hw2 / (d * d + hw2);
        }
        return acc;
    }
};

inline double poisson_weight(double nbar, int n) {
    if (nbar == 0.0) return n == 0 ? 1.0 : 0.0;
    return std::exp(-nbar + n * std::log(nbar) - std::lgamma(n + 1.0));
}

inline SpectrumModel number_split_spectrum(cplx alpha, double chi, double linewidth, double tail = 1e-12) {
    require(linewidth > 0.0 && std::isfinite(linewidth), "number_split_spectrum: linewidth must be positive");
    const double nbar = std::norm(alpha);
    SpectrumModel m;
    m.linewidth = linewidth;
    double covered = 0.0;
    for (int n = 0; n < 10000; ++n) {
        const double w = poisson_weight(nbar, n);
        m.peak_centers.push_back(n * chi);
        m.weights.push_back(w);
        covered += w;
        if (n >= nbar && 1.0 - covered < tail) break;
    }
    return m;
}

// P(alpha) = |<0|D(alpha)|0>|^2
inline double poisson_overlap(cplx alpha) { return std::exp(-std::norm(alpha)); }

// Omega(alpha) - Omega(0) = chi |alpha|^2
inline double ac_stark_detuning(cplx alpha, double chi) { return chi * std::norm(alpha); }

// ------------------------------------------------------------ cavity Ramsey

struct RamseyConfig {
    cplx alpha{1.0};
    double detuning{0.0};  // GHz
    double kerr{0.0};      // GHz
    double chi{0.0};       // GHz, used by the master-equation model only
    std::vector<double> t_grid;  // ns
    std::optional<LossRates> losses;
    int fock_dim{40};
    double qubit_ground_population{1.0};
};

struct RamseySeries {
    std::vector<double> t;
    std::vector<double> p;
};

// P(t) = |<alpha| exp[-i 2 pi (Delta n + K/2 n(n-1)) t] |alpha>|^2 on the truncated space.
inline RamseySeries cavity_ramsey_unitary(const RamseyConfig& cfg) {
    require(!cfg.losses || cfg.losses->none(), "cavity_ramsey_unitary: losses must be absent");
    require(!cfg.t_grid.empty(), "cavity_ramsey_unitary: empty time grid");
    require_displacement_fits(cfg.alpha, cfg.fock_dim);
    const VectorC psi = displacement(cfg.alpha, cfg.fock_dim).col(0);
    RamseySeries out;
    for (double t : cfg.t_grid) {
        cplx amp = 0.0;
        for (int n = 0; n < cfg.fock_dim; ++n) {
            const double e = cfg.detuning * n + 0.5 * cfg.kerr * n * (n - 1.0);
            amp += std::norm(psi(n)) * std::exp(cplx(0.0, -kTwoPi * e * t));
        }
        out.t.push_back(t);
        out.p.push_back(std::norm(amp));
    }
    return out;
}

// Excited population after `drives`, for each qubit/Fock basis population:
// r(q * fock_dim + n) = P_e when starting from |q, n><q, n|. Because the drives are
// diagonal in n and loss only lowers n, qubit-diagonal states are mapped linearly
// through these vectors, and storage coherences never reach the excited population.
inline VectorR population_response(const EffectiveModel& model, const std::vector<DriveTerm>& drives,
                                   const LossRates& losses, double t0, double t1, const EvolveOptions& opt = {},
                                   int jobs = 1) {
    const int n = model.fock_dim;
    const auto rows = parallel_map(static_cast<std::size_t>(2 * n), jobs, [&](std::size_t k) {
        MatrixC m = MatrixC::Zero(2 * n, 2 * n);
        m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0;
        return evolve_to(DensityMatrix(std::move(m), n), model, drives, losses, t0, t1, opt).excited_population();
    });
    return Eigen::Map<const VectorR>(rows.data(), static_cast<Eigen::Index>(rows.size()));
}

inline double apply_response(const VectorR& r, const DensityMatrix& rho) {
    return r.dot(rho.matrix().diagonal().real());
}

// Displace, wait under Kerr/detuning and loss, displace back, then a selective
// pulse on the vacuum peak; returns the qubit excited population versus wait time.
inline RamseySeries cavity_ramsey_master(const RamseyConfig& cfg, const DriveTerm& selective_pulse,
                                         const EvolveOptions& opt = {}, int jobs = 1) {
    require(!cfg.t_grid.empty() && cfg.t_grid.front() >= 0.0, "cavity_ramsey_master: bad time grid");
    const LossRates losses = cfg.losses.value_or(LossRates{});
    EffectiveModel model;
    model.chi = cfg.chi;
    model.kerr = cfg.kerr;
    model.fock_dim = cfg.fock_dim;
    model.storage_detuning = cfg.detuning;

    InitialState init;
    init.qubit_ground_population = cfg.qubit_ground_population;
    DensityMatrix rho0 = displace(make_initial_state(init, cfg.fock_dim), cfg.alpha);

    std::vector<double> grid = cfg.t_grid;
    if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
    const auto traj = evolve(rho0, model, {}, losses, grid, opt);
    const std::size_t skip = grid.size() - cfg.t_grid.size();

    DriveTerm pulse = selective_pulse;
    pulse.t_start = 0.0;
    const VectorR resp = population_response(model, {pulse}, losses, 0.0, pulse.duration(), opt, jobs);

    RamseySeries out;
    for (std::size_t k = skip; k < traj.size(); ++k) {
        out.t.push_back(grid[k]);
        out.p.push_back(apply_response(resp, displace(traj[k], -cfg.alpha)));
    }
    return out;
}

struct FringeFit {
    double frequency{0.0};  // GHz
    double decay_rate{0.0};  // 1/ns, Gaussian envelope exp(-(h r t)^2) on harmonic h
    double contrast{0.0};
    double rms_residual{0.0};
    bool ok{false};
    std::string note;
};

namespace detail {

// Least-squares residual of P(t) ~ c + sum_h exp(-(h r t)^2) (a_h cos + b_h sin)(2 pi h f t)
// with the linear coefficients eliminated.
inline double fringe_residual(const std::vector<double>& t, const VectorR& p, double f, double rate, int harmonics) {
    const auto m = static_cast<Eigen::Index>(t.size());
    MatrixR a(m, 2 * harmonics + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = 1.0;
        for (int h = 1; h <= harmonics; ++h) {
            const double env = std::exp(-std::pow(h * rate * t[i], 2));
            const double ph = kTwoPi * h * f * t[i];
            a(i, 2 * h - 1) = env * std::cos(ph);
            a(i, 2 * h) = env * std::sin(ph);
        }
    }
    const VectorR coef = a.colPivHouseholderQr().solve(p);
    return (a * coef - p).squaredNorm() / static_cast<double>(m);
}

}  // namespace detail

// Fringe frequency of a Ramsey series: periodogram peak, then a variable-projection
// least-squares fit of a harmonic series with a Gaussian envelope.
inline FringeFit fit_fringe_frequency(const std::vector<double>& t, const std::vector<double>& p, int harmonics,
                                      double min_contrast = 0.02) {
    FringeFit fit;
    require(t.size() == p.size() && t.size() >= 8, "fit_fringe_frequency: need at least 8 samples");
    const auto [pmin, pmax] = std::minmax_element(p.begin(), p.end());
    fit.contrast = *pmax - *pmin;
    if (fit.contrast < min_contrast) {
        fit.note = "contrast " + std::to_string(fit.contrast) + " below threshold";
        return fit;
    }
    const double span = t.back() - t.front();
    require(span > 0.0, "fit_fringe_frequency: zero time span");
    const double dt = span / static_cast<double>(t.size() - 1);
    const VectorR pv = Eigen::Map<const VectorR>(p.data(), static_cast<Eigen::Index>(p.size()));
    const double mean = pv.mean();

    // Coarse periodogram, four points per Fourier bin, up to Nyquist.
    const double df = 0.25 / span;
    const double f_nyq = 0.5 / dt;
    double best_f = 0.0, best_pow = -1.0;
    for (double f = 0.75 / span; f < f_nyq; f += df) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) acc += (p[i] - mean) * std::exp(cplx(0.0, -kTwoPi * f * t[i]));
        if (std::norm(acc) > best_pow) {
            best_pow = std::norm(acc);
            best_f = f;
        }
    }
    const int h_max = std::max(1, std::min(harmonics, static_cast<int>(std::floor(f_nyq / best_f)) - 1));

    auto objective = [&](const VectorR& x) {
        const double rate = x(1) * x(1);
        return detail::fringe_residual(t, pv, x(0), rate, h_max);
    };
    VectorR x0(2);
    x0 << best_f, std::sqrt(0.5 / span);
    VectorR steps(2);
    steps << df, 0.5 * x0(1);
    NelderMeadOptions nm;
    nm.max_evals = 600;
    nm.f_tol = 1e-18;
    nm.x_tol = 1e-12;
    auto r = nelder_mead(objective, x0, nm, steps);
    // Restart once from the best point to shake off a collapsed simplex.
    steps << 0.1 * df, 0.1 * std::abs(r.x(1)) + 1e-6;
    r = nelder_mead(objective, r.x, nm, steps);
    fit.frequency = r.x(0);
    fit.decay_rate = r.x(1) * r.x(1);
    fit.rms_residual = std::sqrt(r.f);
    fit.ok = std::isfinite(fit.frequency) && fit.frequency > 0.0;
    if (!fit.ok) fit.note = "fit did not converge";
    return fit;
}

struct RamseyDataset {
    cplx alpha{0.0};
    RamseySeries series;
};

struct KerrExtraction {
    double kerr{0.0};              // GHz, slope of fringe frequency vs |alpha|^2
    double detuning_offset{0.0};  // GHz, intercept
    std::vector<double> nbar;
    std::vector<double> frequency;
    std::vector<std::string> excluded;
};

// Fringe frequency per dataset, then a linear fit of frequency against |alpha|^2.
// Fringe frequencies are taken as positive, so the detuning should exceed the
// Kerr shift K |alpha|^2 in magnitude. Below |alpha|^2 ~ 1 the fringe is the
// 0-1 beat, which carries almost no Kerr shift and bends the line, so those
// datasets are left out of the regression (min_nbar).
inline KerrExtraction extract_kerr_from_ramsey(const std::vector<RamseyDataset>& datasets, double min_nbar = 1.0,
                                               int max_harmonics = 16, double min_contrast = 0.02) {
    KerrExtraction out;
    for (const auto& d : datasets) {
        const double nbar = std::norm(d.alpha);
        if (nbar < min_nbar) {
            out.excluded.push_back("|alpha|^2 = " + std::to_string(nbar) + ": below min_nbar");
            continue;
        }
        const int h = std::min(max_harmonics, static_cast<int>(std::ceil(2.0 * nbar)) + 3);
        const FringeFit f = fit_fringe_frequency(d.series.t, d.series.p, h, min_contrast);
        if (!f.ok) {
            out.excluded.push_back("|alpha|^2 = " + std::to_string(nbar) + ": " + f.note);
            continue;
        }
        out.nbar.push_back(nbar);
        out.frequency.push_back(f.frequency);
    }
    if (out.nbar.size() < 2) throw OptimizationFailure("extract_kerr_from_ramsey: fewer than two usable datasets");
    const auto m = static_cast<Eigen::Index>(out.nbar.size());
    MatrixR a(m, 2);
    VectorR y(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = out.nbar[static_cast<std::size_t>(i)];
        y(i) = out.frequency[static_cast<std::size_t>(i)];
    }
    const VectorR c = a.colPivHouseholderQr().solve(y);
    out.detuning_offset = c(0);
    out.kerr = c(1);
    return out;
}

// ------------------------------------------------------------ measured Wigner

struct WignerMeasurement {
    double duration{1600.0};  // ns, per multiplexed selective pulse
    int max_peak{10};
    std::vector<double> amplitude_scale;  // per peak, multiplies the pi area; empty = all 1
    double qubit_ground_population{1.0};
    EvolveOptions evolve{};
    int jobs{1};
};

struct MeasuredWigner {
    PhaseSpaceGrid grid;
    double max_tail{0.0};  // largest population above max_peak at any grid point
};

inline std::vector<DriveTerm> parity_drives(const EffectiveModel& model, const WignerMeasurement& cfg, int parity) {
    std::vector<DriveTerm> drives;
    for (int n = parity; n <= cfg.max_peak; n += 2) {
        const double scale = n < static_cast<int>(cfg.amplitude_scale.size()) ? cfg.amplitude_scale[n] : 1.0;
        if (scale == 0.0) continue;
        drives.push_back(qubit_pulse(PulseShape::gaussian, cfg.duration, n * model.chi, 0.0, kPi * scale));
    }
    return drives;
}

// Displace by -beta, apply the even- or odd-peak multiplexed pi pulses, read the
// qubit; W = (2/pi)(P_even - P_odd). The qubit is re-prepared before each
// measurement, so only the storage part of rho is used.
inline MeasuredWigner wigner_measured(const MatrixC& rho_storage, const EffectiveModel& model, const LossRates& losses,
                                      const WignerMeasurement& cfg, PhaseSpaceGrid grid) {
    grid.validate();
    const int n = model.fock_dim;
    require(rho_storage.rows() == n, "wigner_measured: storage state and model truncations differ");
    std::vector<VectorR> resp;
    for (int parity = 0; parity < 2; ++parity) {
        resp.push_back(population_response(model, parity_drives(model, cfg, parity), losses, 0.0, cfg.duration,
                                           cfg.evolve, cfg.jobs));
    }
    const double pg = cfg.qubit_ground_population;
    const VectorR r_even = pg * resp[0].head(n) + (1.0 - pg) * resp[0].tail(n);
    const VectorR r_odd = pg * resp[1].head(n) + (1.0 - pg) * resp[1].tail(n);

    MeasuredWigner out;
    grid.values.resize(grid.resolution, grid.resolution);
    const int peaks = std::min(cfg.max_peak + 1, n);
    for (int i = 0; i < grid.resolution; ++i) {
        for (int j = 0; j < grid.resolution; ++j) {
            const MatrixC d = detail::displacement_elements(-grid.at(i, j), n);
            const VectorR pops = (d * rho_storage * d.adjoint()).diagonal().real();
            out.max_tail = std::max(out.max_tail, 1.0 - pops.head(peaks).sum());
            grid.values(i, j) = 2.0 / kPi * (r_even.dot(pops) - r_odd.dot(pops));
        }
    }
    out.grid = std::move(grid);
    return out;
}

// ------------------------------------------------------------ power Rabi

// Excited population after a selective Gaussian pulse on peak `peak` with area
// amplitude * pi, starting from a coherent state and the given qubit preparation.
inline std::vector<double> power_rabi_curve(int peak, cplx alpha_prep, const EffectiveModel& model,
                                            const LossRates& losses, const std::vector<double>& amplitudes,
                                            double duration = 1600.0, double qubit_ground_population = 1.0,
                                            const EvolveOptions& opt = {}, int jobs = 1) {
    require(peak >= 0 && peak < model.fock_dim, "power_rabi_curve: peak outside truncation");
    InitialState init;
    init.qubit_ground_population = qubit_ground_population;
    init.storage = InitialState::Storage::coherent;
    init.alpha = alpha_prep;
    const DensityMatrix rho0 = make_initial_state(init, model.fock_dim);
    return parallel_map(amplitudes.size(), jobs, [&](std::size_t k) {
        const auto pulse = qubit_pulse(PulseShape::gaussian, duration, peak * model.chi, 0.0, kPi * amplitudes[k]);
        return evolve_to(rho0, model, {pulse}, losses, 0.0, duration, opt).excited_population();
    });
}

inline void write_series_csv(std::ostream& os, const std::string& x_name, const std::vector<double>& x,
                             const std::string& y_name, const std::vector<double>& y) {
    require(x.size() == y.size(), "write_series_csv: size mismatch");
    os.precision(12);
    os << x_name << ',' << y_name << '\n';
    for (std::size_t k = 0; k < x.size(); ++k) os << x[k] << ',' << y[k] << '\n';
}

}  // namespace fluxcav

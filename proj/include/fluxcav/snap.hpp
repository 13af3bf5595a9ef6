// snap.hpp: SNAP gates built from photon-number-selective qubit pi pulses followed
// by a fast unconditional pi pulse, plus displacement-based state preparation and
// loss budgeting.
//
// Slow drive on peak n (rotating frame of EffectiveModel):
//   eps_n(t) e^{i(alpha_n - 2 pi dw_n T_slow / 2 + 2 pi omega_n t)} |e><g| / 2 + h.c.,
//   dw_n = omega_n + n chi,
// with a Gaussian envelope of pi area scaled by lambda_n * 2 T_slow. omega_n = -n chi
// puts the drive on the |g, n> -> |e, n> peak.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/lindblad.hpp"
#include "fluxcav/ode.hpp"
#include "fluxcav/optimize.hpp"
#include "fluxcav/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace fluxcav {

struct SelectiveDrive {
    double lambda{0.0};  // GHz; 1 / (2 T_slow) is a pi pulse
    double omega{0.0};   // GHz; -n chi is resonant with peak n
    double phase{0.0};   // rad (alpha_n)
};

struct SnapSpec {
    std::vector<double> theta;  // rad, one entry per driven Fock level
    cplx alpha1{1.0};
    cplx alpha2{0.0};
    std::vector<SelectiveDrive> selective;
    double t_slow{1600.0};  // ns
    double t_fast{40.0};    // ns

    void validate() const {
        require(!theta.empty(), "SnapSpec: theta is empty");
        require(t_slow > t_fast && t_fast > 0.0, "SnapSpec: need t_slow > t_fast > 0");
        require(selective.size() == theta.size(), "SnapSpec: one selective drive per theta entry");
        for (const auto& s : selective)
            require(std::isfinite(s.lambda) && std::isfinite(s.omega) && std::isfinite(s.phase),
                    "SnapSpec: selective drive parameters must be finite");
    }
    [[nodiscard]] int levels() const { return static_cast<int>(theta.size()); }
    [[nodiscard]] double duration() const { return t_slow + t_fast; }
};

// Unoptimized starting point: pi area, on resonance, phases from theta.
inline std::vector<SelectiveDrive> nominal_selective(const std::vector<double>& theta, double chi, double t_slow) {
    std::vector<SelectiveDrive> s(theta.size());
    for (std::size_t n = 0; n < theta.size(); ++n) s[n] = {0.5 / t_slow, -static_cast<double>(n) * chi, theta[n]};
    return s;
}

inline std::vector<DriveTerm> snap_slow_drives(const SnapSpec& spec, const EffectiveModel& model) {
    std::vector<DriveTerm> d;
    for (int n = 0; n < spec.levels(); ++n) {
        const auto& s = spec.selective[static_cast<std::size_t>(n)];
        if (s.lambda == 0.0) continue;
        const double dw = s.omega + n * model.chi;
        d.push_back(qubit_pulse(PulseShape::gaussian, spec.t_slow, -s.omega,
                                s.phase - kTwoPi * dw * spec.t_slow / 2.0, kTwoPi * s.lambda * spec.t_slow));
    }
    return d;
}

inline DriveTerm snap_fast_drive(const SnapSpec& spec) {
    return qubit_pulse(PulseShape::gaussian, spec.t_fast, 0.0, 0.0, kPi, spec.t_slow);
}

inline std::vector<DriveTerm> snap_drives(const SnapSpec& spec, const EffectiveModel& model) {
    auto d = snap_slow_drives(spec, model);
    d.push_back(snap_fast_drive(spec));
    return d;
}

// ------------------------------------------------------------ ideal gate and displacements

inline VectorC ideal_snap_prep(const std::vector<double>& theta, cplx alpha1, cplx alpha2, int dim) {
    require_displacement_fits(alpha1, dim);
    VectorC psi = displacement(alpha1, dim).col(0);
    for (std::size_t n = 0; n < theta.size() && n < static_cast<std::size_t>(dim); ++n)
        psi(static_cast<Eigen::Index>(n)) *= std::exp(cplx(0.0, theta[n]));
    return displacement(alpha2, dim) * psi;
}

inline double ideal_prep_fidelity(const std::vector<double>& theta, cplx alpha1, cplx alpha2, const VectorC& target) {
    const int dim = static_cast<int>(target.size());
    const VectorC psi = ideal_snap_prep(theta, alpha1, alpha2, dim);
    return std::norm(target.dot(psi)) / target.squaredNorm();
}

// Infidelity of D(alpha2) S(theta) D(alpha1)|0> against the target with an ideal gate.
inline double intrinsic_error(const SnapSpec& spec, const VectorC& target) {
    return 1.0 - ideal_prep_fidelity(spec.theta, spec.alpha1, spec.alpha2, target);
}

// Best real alpha2 for fixed alpha1: coarse scan, then golden section.
inline double optimize_alpha2(const std::vector<double>& theta, cplx alpha1, const VectorC& target,
                              double max_abs = 3.0) {
    auto f = [&](double a2) { return -ideal_prep_fidelity(theta, alpha1, a2, target); };
    const int steps = 120;
    double best = 0.0, fbest = f(0.0);
    for (int k = 0; k <= steps; ++k) {
        const double a = -max_abs + 2.0 * max_abs * k / steps;
        const double v = f(a);
        if (v < fbest) {
            fbest = v;
            best = a;
        }
    }
    const double h = 2.0 * max_abs / steps;
    return golden_section(f, best - h, best + h, 1e-10).first;
}

// Joint real (alpha1, alpha2) maximizing the ideal preparation fidelity.
inline std::pair<double, double> optimize_displacements(const std::vector<double>& theta, const VectorC& target,
                                                        double max_abs = 2.0) {
    double best1 = 0.0, best2 = 0.0, fbest = 2.0;
    for (int k = 1; k <= 40; ++k) {
        const double a1 = max_abs * k / 40.0;
        const double a2 = optimize_alpha2(theta, a1, target);
        const double v = 1.0 - ideal_prep_fidelity(theta, a1, a2, target);
        if (v < fbest) {
            fbest = v;
            best1 = a1;
            best2 = a2;
        }
    }
    VectorR x0(2);
    x0 << best1, best2;
    NelderMeadOptions nm;
    nm.initial_step = 0.02;
    nm.f_tol = 1e-14;
    nm.x_tol = 1e-9;
    const auto r = nelder_mead(
        [&](const VectorR& x) { return 1.0 - ideal_prep_fidelity(theta, x(0), x(1), target); }, x0, nm);
    return {r.x(0), r.x(1)};
}

// Populations of D(alpha)|0> on the first `levels` Fock states.
inline std::vector<double> coherent_weights(cplx alpha, int levels) {
    std::vector<double> w(static_cast<std::size_t>(levels));
    const double nbar = std::norm(alpha);
    for (int n = 0; n < levels; ++n)
        w[static_cast<std::size_t>(n)] =
            nbar == 0.0 ? (n == 0 ? 1.0 : 0.0) : std::exp(-nbar + n * std::log(nbar) - std::lgamma(n + 1.0));
    return w;
}

// ------------------------------------------------------------ per-Fock propagation

namespace detail {

// exp(-i 2 pi H dt) for Hermitian 2x2 H.
inline Eigen::Matrix2cd expm2(const Eigen::Matrix2cd& h, double dt) {
    const double phi = kTwoPi * dt;
    const double m = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double d = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const double r = std::sqrt(d * d + std::norm(h(1, 0)));
    Eigen::Matrix2cd k = h;
    k(0, 0) -= m;
    k(1, 1) -= m;
    const double s = r > 0.0 ? std::sin(phi * r) / r : phi;
    Eigen::Matrix2cd u = std::cos(phi * r) * Eigen::Matrix2cd::Identity() - cplx(0.0, s) * k;
    return std::exp(cplx(0.0, -phi * m)) * u;
}

// 2x2 block of Fock level n in the {g, e} basis.
inline Eigen::Matrix2cd block_hamiltonian(const EffectiveModel& model, int n, cplx c) {
    Eigen::Matrix2cd h;
    const double kerr = 0.5 * model.kerr * n * (n - 1.0) + model.storage_detuning * n;
    h(0, 0) = kerr;
    h(1, 1) = kerr + model.chi * n;
    h(1, 0) = 0.5 * c;
    h(0, 1) = 0.5 * std::conj(c);
    return h;
}

inline cplx drive_sum(const std::vector<DriveTerm>& drives, double t) {
    cplx c = 0.0;
    for (const auto& d : drives) c += d.value(t);
    return c;
}

}  // namespace detail

// Loss-free propagators of the first `levels` Fock blocks over [t0, t1] from the
// adaptive integrator. Drives are qubit drives.
inline std::vector<Eigen::Matrix2cd> block_propagators(const EffectiveModel& model,
                                                       const std::vector<DriveTerm>& drives, int levels, double t0,
                                                       double t1, double tol = 1e-10) {
    OdeOptions oo;
    oo.rtol = tol;
    oo.atol = 1e-3 * tol;
    for (const auto& d : drives)
        if (d.duration() > 0.0) oo.h_max = std::min(oo.h_max, 0.25 * d.duration());
    std::vector<Eigen::Matrix2cd> out;
    out.reserve(static_cast<std::size_t>(levels));
    for (int n = 0; n < levels; ++n) {
        auto rhs = [&](double t, const Eigen::Matrix2cd& u) -> Eigen::Matrix2cd {
            return cplx(0.0, -kTwoPi) * detail::block_hamiltonian(model, n, detail::drive_sum(drives, t)) * u;
        };
        out.push_back(integrate_dopri5(rhs, Eigen::Matrix2cd(Eigen::Matrix2cd::Identity()), {t0, t1}, oo).back());
    }
    return out;
}

// ------------------------------------------------------------ selective-pulse optimization

struct SnapOptions {
    double dt{2.0};                // ns, midpoint step inside the optimizer
    bool include_fast{true};       // fold the fast pulse's chi phase into the optimization
    bool optimize{true};           // false: nominal pulses with analytic phases only
    int max_evals{6000};
    double regularization{1e-4};  // pull toward the nominal pulses
    double fail_threshold{0.05};
    double ode_tol{1e-10};
};

struct SnapOptimization {
    SnapSpec spec;
    double infidelity{0.0};          // weighted, loss-free, integrator-checked
    double nominal_infidelity{0.0};  // pi pulses with corrected phases only
    int evals{0};
    bool converged{true};
    std::string note;
};

namespace detail {

// Loss-free per-level amplitudes (see snap_amplitudes) with the slow stage stepped
// piecewise constant at the midpoints. All selective drives share one envelope
// shape, so the drive sum is the reference pi envelope times rotating phasors.
class SnapEvaluator {
public:
    SnapEvaluator(const EffectiveModel& model, int levels, double t_slow, double t_fast, const SnapOptions& opt)
        : model_(model), levels_(levels), t_slow_(t_slow), include_fast_(opt.include_fast) {
        const auto steps = std::max<long>(1, static_cast<long>(std::ceil(t_slow / opt.dt)));
        h_ = t_slow / static_cast<double>(steps);
        const DriveTerm ref = qubit_pulse(PulseShape::gaussian, t_slow, 0.0, 0.0, kPi);
        g_.resize(steps);
        for (long k = 0; k < steps; ++k) g_(k) = ref.amplitude((static_cast<double>(k) + 0.5) * h_).real();
        if (include_fast_) {
            SnapSpec s;
            s.t_slow = t_slow;
            s.t_fast = t_fast;
            fast_ = block_propagators(model, {snap_fast_drive(s)}, levels, t_slow, t_slow + t_fast, opt.ode_tol);
        }
    }

    [[nodiscard]] std::vector<cplx> amplitudes(const SnapSpec& spec) const {
        std::vector<cplx> p, r;
        for (int m = 0; m < levels_; ++m) {
            const auto& d = spec.selective[static_cast<std::size_t>(m)];
            const double phase = d.phase - kTwoPi * (d.omega + m * model_.chi) * t_slow_ / 2.0;
            // detuning is -omega, so the carrier is e^{+i 2 pi omega t}
            p.push_back(2.0 * t_slow_ * d.lambda * std::exp(cplx(0.0, phase + kTwoPi * d.omega * 0.5 * h_)));
            r.push_back(std::exp(cplx(0.0, kTwoPi * d.omega * h_)));
        }
        std::vector<Eigen::Vector2cd> v(static_cast<std::size_t>(levels_), Eigen::Vector2cd(1.0, 0.0));
        for (Eigen::Index k = 0; k < g_.size(); ++k) {
            cplx c = 0.0;
            for (std::size_t m = 0; m < p.size(); ++m) {
                c += p[m];
                p[m] *= r[m];
            }
            c *= g_(k);
            for (int n = 0; n < levels_; ++n) v[n] = expm2(block_hamiltonian(model_, n, c), h_) * v[n];
        }
        std::vector<cplx> w(static_cast<std::size_t>(levels_));
        for (int n = 0; n < levels_; ++n)
            w[n] = include_fast_ ? (fast_[n] * v[n])(0) : cplx(0.0, -1.0) * v[n](1);
        return w;
    }

private:
    EffectiveModel model_;
    int levels_;
    double t_slow_;
    bool include_fast_;
    double h_{0.0};
    VectorR g_;
    std::vector<Eigen::Matrix2cd> fast_;
};

// Per-level amplitude that should equal e^{i theta_n}: <g,n|U_fast U_slow|g,n> when
// the fast pulse is simulated, otherwise -i <e,n|U_slow|g,n> (ideal fast pi pulse).
inline std::vector<cplx> snap_amplitudes(const SnapSpec& spec, const EffectiveModel& model, const SnapOptions& opt) {
    const int levels = spec.levels();
    const auto slow = snap_slow_drives(spec, model);
    const auto u = block_propagators(model, slow, levels, 0.0, spec.t_slow, opt.ode_tol);
    std::vector<cplx> w(static_cast<std::size_t>(levels));
    if (opt.include_fast) {
        const auto f =
            block_propagators(model, {snap_fast_drive(spec)}, levels, spec.t_slow, spec.duration(), opt.ode_tol);
        for (int n = 0; n < levels; ++n) w[static_cast<std::size_t>(n)] = (f[n] * u[n])(0, 0);
    } else {
        for (int n = 0; n < levels; ++n) w[static_cast<std::size_t>(n)] = cplx(0.0, -1.0) * u[n](1, 0);
    }
    return w;
}

inline double snap_objective(const std::vector<cplx>& w, const std::vector<double>& theta,
                             const std::vector<double>& weights) {
    cplx acc = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) acc += weights[n] * std::exp(cplx(0.0, -theta[n])) * w[n];
    return 1.0 - std::norm(acc);
}

// Rotate each drive phase so the level-n amplitude points along e^{i theta_n}.
inline void correct_phases(SnapSpec& spec, const std::vector<cplx>& w) {
    for (std::size_t n = 0; n < w.size(); ++n)
        if (std::abs(w[n]) > 1e-6) spec.selective[n].phase += spec.theta[n] - std::arg(w[n]);
}

}  // namespace detail

// Weighted loss-free SNAP infidelity 1 - |sum_n w_n e^{-i theta_n} a_n|^2 of the
// realized pulses, with a_n as in snap_amplitudes. Weights should sum to <= 1.
inline double snap_infidelity(const SnapSpec& spec, const EffectiveModel& model, const std::vector<double>& weights,
                              const SnapOptions& opt = {}) {
    spec.validate();
    require(weights.size() == spec.theta.size(), "snap_infidelity: one weight per level");
    return detail::snap_objective(detail::snap_amplitudes(spec, model, opt), spec.theta, weights);
}

// Starts from pi-area pulses on resonance with phases corrected for the drive
// crosstalk, then a Levenberg-Marquardt fit of every (lambda_n, omega_n, alpha_n) to
// the residuals sqrt(w_n) (e^{-i theta_n} a_n - 1) plus a small pull toward the start.
inline SnapOptimization optimize_snap(const std::vector<double>& theta, const std::vector<double>& weights,
                                      const EffectiveModel& model, double t_slow, double t_fast,
                                      const SnapOptions& opt = {}) {
    model.validate();
    require(weights.size() == theta.size(), "optimize_snap: one weight per theta entry");
    require(static_cast<int>(theta.size()) <= model.fock_dim, "optimize_snap: theta exceeds the Fock truncation");
    const int levels = static_cast<int>(theta.size());
    SnapOptimization out;
    out.spec.theta = theta;
    out.spec.t_slow = t_slow;
    out.spec.t_fast = t_fast;
    out.spec.selective = nominal_selective(theta, model.chi, t_slow);
    out.spec.validate();
    const detail::SnapEvaluator eval(model, levels, t_slow, t_fast, opt);

    // One pass is inexact because each phase also moves the neighbours' crosstalk.
    for (int it = 0; it < 3; ++it) detail::correct_phases(out.spec, eval.amplitudes(out.spec));
    out.nominal_infidelity = detail::snap_objective(eval.amplitudes(out.spec), theta, weights);

    if (opt.optimize) {
        const SnapSpec start = out.spec;
        const double lam0 = 0.5 / t_slow;
        // x = (lambda_n / lam0 - 1, (omega_n + n chi) t_slow, alpha_n - start) per level
        auto unpack = [&](const VectorR& x) {
            SnapSpec s = start;
            for (int n = 0; n < levels; ++n) {
                s.selective[n].lambda = lam0 * (1.0 + x(3 * n));
                s.selective[n].omega = -n * model.chi + x(3 * n + 1) / t_slow;
                s.selective[n].phase += x(3 * n + 2);
            }
            return s;
        };
        auto residuals = [&](const VectorR& x, VectorR& r) {
            const auto a = eval.amplitudes(unpack(x));
            for (int n = 0; n < levels; ++n) {
                const cplx d = std::sqrt(weights[n]) * (std::exp(cplx(0.0, -theta[n])) * a[n] - 1.0);
                r(2 * n) = d.real();
                r(2 * n + 1) = d.imag();
            }
            r.tail(3 * levels) = opt.regularization * x;
        };
        LeastSquaresOptions lso;
        lso.max_evals = opt.max_evals;
        const auto r = least_squares(residuals, VectorR::Zero(3 * levels), 5 * levels, lso);
        out.spec = unpack(r.x);
        out.evals = r.evals;
    }
    out.infidelity = detail::snap_objective(detail::snap_amplitudes(out.spec, model, opt), theta, weights);
    if (out.infidelity > opt.fail_threshold) {
        out.converged = false;
        out.note = "selective-pulse infidelity " + std::to_string(out.infidelity) + " above " +
                   std::to_string(opt.fail_threshold);
    }
    return out;
}

// ------------------------------------------------------------ state preparation

struct SnapPrep {
    DensityMatrix state;
    double fidelity{0.0};
};

// D(alpha2) . fast pi . selective pulses . D(alpha1) on the initial state under the
// master equation; displacements are instantaneous. Fidelity is taken on the
// storage with the qubit traced out.
inline SnapPrep simulate_snap_prep(const SnapSpec& spec, const EffectiveModel& model, const LossRates& losses,
                                   const InitialState& init, const VectorC& target, const EvolveOptions& opt = {}) {
    spec.validate();
    require(target.size() <= model.fock_dim, "simulate_snap_prep: target larger than the Fock truncation");
    DensityMatrix rho = displace(make_initial_state(init, model.fock_dim), spec.alpha1);
    rho = evolve_to(rho, model, snap_drives(spec, model), losses, 0.0, spec.duration(), opt);
    rho = displace(rho, spec.alpha2);
    VectorC psi = VectorC::Zero(model.fock_dim);
    psi.head(target.size()) = target;
    const double f = rho.storage_fidelity(psi);
    return {std::move(rho), f};
}

// Loss-free result from the block propagators for a perfectly initialized qubit,
// used to cross-check the master-equation path. Returns the joint qubit-storage ket.
inline VectorC realized_snap_state(const SnapSpec& spec, const EffectiveModel& model, double tol = 1e-10) {
    spec.validate();
    const int n = model.fock_dim;
    const auto u = block_propagators(model, snap_drives(spec, model), n, 0.0, spec.duration(), tol);
    require_displacement_fits(spec.alpha1, n);
    const VectorC c = displacement(spec.alpha1, n).col(0);
    VectorC psi(2 * n);
    for (int k = 0; k < n; ++k) {
        psi(k) = u[k](0, 0) * c(k);
        psi(n + k) = u[k](1, 0) * c(k);
    }
    const MatrixC d = displacement(spec.alpha2, n);
    psi.head(n) = d * psi.head(n).eval();
    psi.tail(n) = d * psi.tail(n).eval();
    return psi;
}

// ------------------------------------------------------------ error budget

struct ErrorBudget {
    double intrinsic{0.0};
    std::vector<std::pair<std::string, double>> raw;           // one channel at a time
    std::vector<std::pair<std::string, double>> per_channel;  // weighted
    double total{0.0};
    double loss_free{0.0};  // realized pulses, no loss, perfect init
};

// Channels: initialization, storage T1, qubit depolarization, qubit dephasing and
// coherent error (realized pulses versus the ideal gate). Each loss channel's raw
// error is measured against the loss-free run; the raw errors are then rescaled
// so they add up to total - intrinsic.
inline ErrorBudget error_budget(const SnapSpec& spec, const EffectiveModel& model, const LossRates& losses,
                                const InitialState& init, const VectorC& target, const EvolveOptions& opt = {},
                                int jobs = 1) {
    InitialState perfect = init;
    perfect.qubit_ground_population = 1.0;
    LossRates storage{}, depol{}, deph{};
    storage.kappa_s = losses.kappa_s;
    depol.gamma_down = losses.gamma_down;
    depol.gamma_up = losses.gamma_up;
    deph.gamma_phi = losses.gamma_phi;
    struct Run {
        LossRates l;
        InitialState i;
    };
    const std::vector<Run> runs{{LossRates{}, perfect}, {losses, init},  {LossRates{}, init},
                                {storage, perfect},     {depol, perfect}, {deph, perfect}};
    const auto err = parallel_map(runs.size(), jobs, [&](std::size_t k) {
        return 1.0 - simulate_snap_prep(spec, model, runs[k].l, runs[k].i, target, opt).fidelity;
    });

    ErrorBudget b;
    b.intrinsic = intrinsic_error(spec, target);
    b.loss_free = err[0];
    b.total = err[1];
    b.raw = {{"initialization", err[2] - err[0]},
             {"storage_t1", err[3] - err[0]},
             {"qubit_depolarization", err[4] - err[0]},
             {"qubit_dephasing", err[5] - err[0]},
             {"coherent", err[0] - b.intrinsic}};
    double sum = 0.0;
    for (const auto& [name, e] : b.raw) sum += e;
    const double scale = sum != 0.0 ? (b.total - b.intrinsic) / sum : 0.0;
    for (const auto& [name, e] : b.raw) b.per_channel.emplace_back(name, e * scale);
    return b;
}

// ------------------------------------------------------------ incoherent error map

// Error of the selective stage alone: the state after the slow pulses is compared
// with |e> (x) S(theta)-phased D(alpha1)|0>, and the loss-free error of the same
// pulses is subtracted. Rows follow t1s_grid, columns tphi_grid (both us; an
// infinite entry switches the channel off).
inline MatrixR incoherent_error_map(const SnapSpec& spec, const EffectiveModel& model,
                                    const std::vector<double>& t1s_grid, const std::vector<double>& tphi_grid,
                                    const EvolveOptions& opt = {}, int jobs = 1) {
    spec.validate();
    require(!t1s_grid.empty() && !tphi_grid.empty(), "incoherent_error_map: empty grid");
    const int n = model.fock_dim;
    InitialState init;
    const DensityMatrix rho0 = displace(make_initial_state(init, n), spec.alpha1);
    const auto drives = snap_slow_drives(spec, model);

    // Ideal slow-stage output, with the phase convention of snap_amplitudes.
    VectorC c = displacement(spec.alpha1, n).col(0);
    VectorC psi = VectorC::Zero(2 * n);
    for (int k = 0; k < n; ++k) {
        const double th = k < spec.levels() ? spec.theta[static_cast<std::size_t>(k)] : 0.0;
        psi(n + k) = cplx(0.0, 1.0) * std::exp(cplx(0.0, th)) * c(k);
    }
    auto error_of = [&](const LossRates& l) {
        const DensityMatrix r = evolve_to(rho0, model, drives, l, 0.0, spec.t_slow, opt);
        return 1.0 - (psi.adjoint() * r.matrix() * psi)(0, 0).real();
    };
    const double coherent = error_of(LossRates{});

    const std::size_t rows = t1s_grid.size(), cols = tphi_grid.size();
    const auto cells = parallel_map(rows * cols, jobs, [&](std::size_t k) {
        const double t1 = t1s_grid[k / cols], tp = tphi_grid[k % cols];
        require(t1 > 0.0 && tp > 0.0, "incoherent_error_map: lifetimes must be positive");
        LossRates l;
        l.kappa_s = std::isinf(t1) ? 0.0 : 1.0 / t1;
        l.gamma_phi = std::isinf(tp) ? 0.0 : 1.0 / tp;
        return error_of(l) - coherent;
    });
    MatrixR out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t k = 0; k < cells.size(); ++k)
        out(static_cast<Eigen::Index>(k / cols), static_cast<Eigen::Index>(k % cols)) = cells[k];
    return out;
}

}  // namespace fluxcav

// lindblad.hpp: rotating-frame qubit ⊗ storage model under drives and Lindblad loss.
//
// Basis ordering: |q, n> with q in {g = 0, e = 1} slowest, flat index q * fock_dim + n.
// In the frame of Omega |e><e| + omega s†s the static Hamiltonian is diagonal:
//   H = chi n |e><e| + (K/2) n (n - 1) + storage_detuning * n.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/ode.hpp"
#include "fluxcav/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace fluxcav {

struct EffectiveModel {
    double chi{0.0};   // GHz
    double kerr{0.0};  // GHz
    int fock_dim{20};
    double storage_detuning{0.0};  // GHz, frame offset of the storage mode
    // Frame frequencies, kept only for drive-detuning bookkeeping.
    double omega_qubit{std::numeric_limits<double>::quiet_NaN()};
    double omega_storage{std::numeric_limits<double>::quiet_NaN()};

    [[nodiscard]] Eigen::Index dim() const { return 2 * static_cast<Eigen::Index>(fock_dim); }
    [[nodiscard]] Eigen::Index index(int q, int n) const { return q * static_cast<Eigen::Index>(fock_dim) + n; }

    void validate() const {
        require(fock_dim >= 2, "EffectiveModel: fock_dim must be >= 2");
        require(std::isfinite(chi) && std::isfinite(kerr) && std::isfinite(storage_detuning),
                "EffectiveModel: parameters must be finite");
    }

    // Diagonal of the static rotating-frame Hamiltonian (GHz).
    [[nodiscard]] VectorR energies() const {
        VectorR e(dim());
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n < fock_dim; ++n)
                e(index(q, n)) = chi * n * q + 0.5 * kerr * n * (n - 1.0) + storage_detuning * n;
        return e;
    }
};

enum class DriveTarget { qubit, storage };

// H_drive(t) = 1/2 eps(t) e^{i(phase - 2 pi detuning t)} X + h.c., with X = |e><g| for
// the qubit and X = s for the storage. With this normalization a resonant qubit
// drive rotates by 2 pi * integral(eps dt).
struct DriveTerm {
    DriveTarget target{DriveTarget::qubit};
    VectorC envelope;    // samples of eps (GHz)
    double dt{1.0};      // sample spacing (ns)
    double t_start{0.0};  // time of the first sample (ns)
    double detuning{0.0};  // GHz
    double phase{0.0};     // rad

    [[nodiscard]] double duration() const {
        return envelope.size() > 1 ? dt * static_cast<double>(envelope.size() - 1) : 0.0;
    }
    [[nodiscard]] double t_end() const { return t_start + duration(); }

    void validate() const {
        require(dt > 0.0 && std::isfinite(dt), "DriveTerm: sample spacing must be positive");
        require(envelope.allFinite(), "DriveTerm: envelope must be finite");
    }

    // Linear interpolation of the envelope; zero outside the sampled window.
    [[nodiscard]] cplx amplitude(double t) const {
        const double u = (t - t_start) / dt;
        if (envelope.size() == 0 || u < 0.0 || u > static_cast<double>(envelope.size() - 1)) return 0.0;
        if (envelope.size() == 1) return envelope(0);
        const auto k = std::min<Eigen::Index>(static_cast<Eigen::Index>(u), envelope.size() - 2);
        const double f = u - static_cast<double>(k);
        return (1.0 - f) * envelope(k) + f * envelope(k + 1);
    }

    // Coefficient multiplying X (before the 1/2), carrier included.
    [[nodiscard]] cplx value(double t) const {
        const cplx a = amplitude(t);
        if (a == 0.0) return 0.0;
        return a * std::exp(cplx(0.0, phase - kTwoPi * detuning * t));
    }
};

enum class PulseShape { gaussian, square };

// Gaussian pulses use sigma = duration / 4 with the edge value subtracted so the
// envelope starts and ends at zero.
inline VectorR pulse_shape(PulseShape shape, double duration, Eigen::Index samples) {
    require(duration > 0.0, "pulse_shape: duration must be positive");
    require(samples >= 2, "pulse_shape: need at least two samples");
    VectorR s(samples);
    const double sigma = duration / 4.0;
    const double edge = std::exp(-0.5 * std::pow(0.5 * duration / sigma, 2));
    for (Eigen::Index k = 0; k < samples; ++k) {
        const double t = duration * static_cast<double>(k) / static_cast<double>(samples - 1);
        s(k) = shape == PulseShape::square ? 1.0 : std::exp(-0.5 * std::pow((t - 0.5 * duration) / sigma, 2)) - edge;
    }
    return s;
}

// Trapezoid integral of a sampled envelope; exact for its linear interpolant.
inline double envelope_area(const VectorR& s, double dt) {
    if (s.size() < 2) return 0.0;
    return dt * (s.sum() - 0.5 * (s(0) + s(s.size() - 1)));
}

inline Eigen::Index default_samples(double duration) {
    return std::max<Eigen::Index>(201, static_cast<Eigen::Index>(std::ceil(duration / 0.5)) + 1);
}

inline DriveTerm qubit_pulse(PulseShape shape, double duration, double detuning, double phase, double area,
                             double t_start = 0.0, Eigen::Index samples = 0) {
    require(duration > 0.0 && std::isfinite(duration), "qubit_pulse: duration must be positive");
    if (samples <= 0) samples = default_samples(duration);
    const VectorR s = pulse_shape(shape, duration, samples);
    const double dt = duration / static_cast<double>(samples - 1);
    DriveTerm d;
    d.target = DriveTarget::qubit;
    d.envelope = (s * (area / (kTwoPi * envelope_area(s, dt)))).cast<cplx>();
    d.dt = dt;
    d.t_start = t_start;
    d.detuning = detuning;
    d.phase = phase;
    return d;
}

// Rates in 1/us.
struct LossRates {
    double kappa_s{0.0};
    double gamma_down{0.0};
    double gamma_up{0.0};
    double gamma_phi{0.0};

    void validate() const {
        for (double r : {kappa_s, gamma_down, gamma_up, gamma_phi})
            require(r >= 0.0 && std::isfinite(r), "LossRates: rates must be finite and non-negative");
    }
    [[nodiscard]] bool none() const { return kappa_s == 0.0 && gamma_down == 0.0 && gamma_up == 0.0 && gamma_phi == 0.0; }

    // Qubit rates from T1, T2 and the thermal ground-state population p_g:
    // Gamma_up / (Gamma_up + Gamma_down) = 1 - p_g, Gamma_up + Gamma_down = 1/T1,
    // Gamma_phi = 1/T2 - 1/(2 T1). Infinite times give zero rates.
    static LossRates from_times(double t1_storage_us, double t1_qubit_us, double t2_qubit_us, double ground_population) {
        require(ground_population >= 0.0 && ground_population <= 1.0, "LossRates: ground population outside [0, 1]");
        auto inv = [](double t) { return std::isinf(t) ? 0.0 : 1.0 / t; };
        LossRates r;
        r.kappa_s = inv(t1_storage_us);
        const double g1 = inv(t1_qubit_us);
        r.gamma_down = ground_population * g1;
        r.gamma_up = (1.0 - ground_population) * g1;
        r.gamma_phi = std::max(0.0, inv(t2_qubit_us) - 0.5 * g1);
        r.validate();
        return r;
    }
};

class DensityMatrix {
public:
    DensityMatrix() = default;
    DensityMatrix(MatrixC m, int fock_dim) : m_(std::move(m)), fock_dim_(fock_dim) {
        require(m_.rows() == 2 * fock_dim_ && m_.cols() == m_.rows(), "DensityMatrix: dimension must be 2 * fock_dim");
    }

    static DensityMatrix pure(const VectorC& psi, int fock_dim) {
        return DensityMatrix(psi * psi.adjoint() / psi.squaredNorm(), fock_dim);
    }

    [[nodiscard]] const MatrixC& matrix() const { return m_; }
    [[nodiscard]] MatrixC& matrix() { return m_; }
    [[nodiscard]] int fock_dim() const { return fock_dim_; }
    [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }

    [[nodiscard]] double trace() const { return m_.trace().real(); }
    [[nodiscard]] double purity() const { return (m_ * m_).trace().real(); }
    [[nodiscard]] double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
    [[nodiscard]] double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<MatrixC> es(0.5 * (m_ + m_.adjoint()), Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }

    // Throws IntegrationError when an invariant is broken by more than `tol`.
    void check(double tol) const {
        if (hermiticity_error() > tol) throw IntegrationError("DensityMatrix: Hermiticity violated");
        if (std::abs(trace() - 1.0) > tol) throw IntegrationError("DensityMatrix: trace drift " + std::to_string(trace() - 1.0));
        if (min_eigenvalue() < -tol) throw IntegrationError("DensityMatrix: negative eigenvalue " + std::to_string(min_eigenvalue()));
    }

    [[nodiscard]] double excited_population() const {
        return m_.diagonal().segment(fock_dim_, fock_dim_).real().sum();
    }
    // Storage photon distribution with the qubit traced out.
    [[nodiscard]] VectorR fock_populations() const {
        return (m_.diagonal().head(fock_dim_) + m_.diagonal().tail(fock_dim_)).real();
    }
    [[nodiscard]] double photon_number() const {
        const VectorR p = fock_populations();
        return (VectorR::LinSpaced(fock_dim_, 0, fock_dim_ - 1).array() * p.array()).sum();
    }
    [[nodiscard]] double vacuum_population() const { return fock_populations()(0); }
    // <s>
    [[nodiscard]] cplx storage_mean() const {
        cplx acc = 0.0;
        for (int q = 0; q < 2; ++q)
            for (int n = 0; n + 1 < fock_dim_; ++n)
                acc += std::sqrt(n + 1.0) * m_(q * fock_dim_ + n + 1, q * fock_dim_ + n);
        return acc;
    }
    // Storage state with the qubit traced out.
    [[nodiscard]] MatrixC storage_state() const {
        return m_.topLeftCorner(fock_dim_, fock_dim_) + m_.bottomRightCorner(fock_dim_, fock_dim_);
    }
    // <psi|rho|psi> for a pure storage target with the qubit traced out.
    [[nodiscard]] double storage_fidelity(const VectorC& psi) const {
        return (psi.adjoint() * storage_state() * psi)(0, 0).real() / psi.squaredNorm();
    }

private:
    MatrixC m_;
    int fock_dim_{0};
};

// D(alpha) = exp(alpha a† - alpha* a) on an n-dimensional truncated Fock space.
inline MatrixC displacement(cplx alpha, int n) {
    const MatrixC a = ops::destroy(n).cast<cplx>();
    // alpha a† - alpha* a = i * G with G Hermitian.
    const MatrixC g = cplx(0.0, -1.0) * (alpha * a.adjoint() - std::conj(alpha) * a);
    return ops::expi_hermitian(0.5 * (g + g.adjoint()));
}

inline void require_displacement_fits(cplx alpha, int fock_dim) {
    const double need = 4.0 * std::norm(alpha);
    if (need > fock_dim) {
        throw TruncationError("displace: |alpha|^2 = " + std::to_string(std::norm(alpha)) + " needs fock_dim >= " +
                              std::to_string(static_cast<int>(std::ceil(need))));
    }
}

inline DensityMatrix displace(const DensityMatrix& rho, cplx alpha) {
    const int n = rho.fock_dim();
    require_displacement_fits(alpha, n);
    const MatrixC d = ops::kron(MatrixC::Identity(2, 2), displacement(alpha, n));
    return DensityMatrix(d * rho.matrix() * d.adjoint(), n);
}

struct InitialState {
    enum class Storage { vacuum, fock, coherent };
    double qubit_ground_population{1.0};
    Storage storage{Storage::vacuum};
    int fock_n{0};
    cplx alpha{0.0};
};

inline VectorC storage_ket(const InitialState& init, int fock_dim) {
    VectorC v = VectorC::Zero(fock_dim);
    switch (init.storage) {
    case InitialState::Storage::vacuum:
        v(0) = 1.0;
        break;
    case InitialState::Storage::fock:
        require(init.fock_n >= 0 && init.fock_n < fock_dim, "InitialState: Fock index outside truncation");
        v(init.fock_n) = 1.0;
        break;
    case InitialState::Storage::coherent: {
        require_displacement_fits(init.alpha, fock_dim);
        v = displacement(init.alpha, fock_dim).col(0);
        break;
    }
    }
    return v;
}

// (p_g |g><g| + (1 - p_g) |e><e|) ⊗ |psi><psi|
inline DensityMatrix make_initial_state(const InitialState& init, int fock_dim) {
    require(init.qubit_ground_population >= 0.0 && init.qubit_ground_population <= 1.0,
            "InitialState: ground population outside [0, 1]");
    const VectorC psi = storage_ket(init, fock_dim);
    const MatrixC cav = psi * psi.adjoint();
    MatrixC m = MatrixC::Zero(2 * fock_dim, 2 * fock_dim);
    m.topLeftCorner(fock_dim, fock_dim) = init.qubit_ground_population * cav;
    m.bottomRightCorner(fock_dim, fock_dim) = (1.0 - init.qubit_ground_population) * cav;
    return DensityMatrix(std::move(m), fock_dim);
}

struct EvolveOptions {
    double tol{1e-8};          // relative tolerance of the integrator
    double atol{1e-11};
    bool check_invariants{true};
};

// Lindblad right-hand side in 1/ns, written out on the block structure of the
// basis so each evaluation is O(dim^2).
class LindbladRhs {
public:
    LindbladRhs(const EffectiveModel& model, const std::vector<DriveTerm>& drives, const LossRates& losses)
        : n_(model.fock_dim), drives_(drives) {
        model.validate();
        losses.validate();
        for (const auto& d : drives_) d.validate();
        kappa_ = units::per_us_to_per_ns(losses.kappa_s);
        down_ = units::per_us_to_per_ns(losses.gamma_down);
        up_ = units::per_us_to_per_ns(losses.gamma_up);
        phi_ = units::per_us_to_per_ns(losses.gamma_phi);
        // G = -i 2 pi H - 1/2 sum L†L is diagonal for the static part.
        const VectorR e = model.energies();
        g_diag_.resize(model.dim());
        for (int q = 0; q < 2; ++q) {
            for (int n = 0; n < n_; ++n) {
                const Eigen::Index i = model.index(q, n);
                const double decay = kappa_ * n + (q == 1 ? down_ : up_) + 0.5 * phi_;
                g_diag_(i) = cplx(-0.5 * decay, -kTwoPi * e(i));
            }
        }
        sqrt_n_.resize(n_);
        for (int n = 0; n < n_; ++n) sqrt_n_(n) = std::sqrt(static_cast<double>(n));
    }

    MatrixC operator()(double t, const MatrixC& rho) const {
        const Eigen::Index n = n_;
        MatrixC y = g_diag_.asDiagonal() * rho;

        cplx cq = 0.0, cs = 0.0;
        for (const auto& d : drives_) {
            const cplx v = d.value(t);
            if (d.target == DriveTarget::qubit) cq += v;
            else cs += v;
        }
        const cplx mi2pi(0.0, -kTwoPi);
        if (cq != 0.0) {
            // H_q = 1/2 (cq |e><g| + cq* |g><e|)
            y.bottomRows(n) += (0.5 * mi2pi * cq) * rho.topRows(n);
            y.topRows(n) += (0.5 * mi2pi * std::conj(cq)) * rho.bottomRows(n);
        }
        if (cs != 0.0) {
            // H_s = 1/2 (cs s + cs* s†) on both qubit blocks
            for (int q = 0; q < 2; ++q) {
                const Eigen::Index o = q * n;
                for (Eigen::Index k = 0; k + 1 < n; ++k) {
                    y.row(o + k) += (0.5 * mi2pi * cs * sqrt_n_(k + 1)) * rho.row(o + k + 1);
                    y.row(o + k + 1) += (0.5 * mi2pi * std::conj(cs) * sqrt_n_(k + 1)) * rho.row(o + k);
                }
            }
        }

        MatrixC out = y + y.adjoint();
        if (kappa_ > 0.0) {
            // s rho s†
            for (int q = 0; q < 2; ++q)
                for (int p = 0; p < 2; ++p)
                    for (Eigen::Index j = 0; j + 1 < n; ++j)
                        for (Eigen::Index i = 0; i + 1 < n; ++i)
                            out(q * n + i, p * n + j) += kappa_ * sqrt_n_(i + 1) * sqrt_n_(j + 1) * rho(q * n + i + 1, p * n + j + 1);
        }
        if (down_ > 0.0) out.topLeftCorner(n, n) += down_ * rho.bottomRightCorner(n, n);
        if (up_ > 0.0) out.bottomRightCorner(n, n) += up_ * rho.topLeftCorner(n, n);
        if (phi_ > 0.0) {
            // (Gamma_phi / 2) Z rho Z
            out.topLeftCorner(n, n) += 0.5 * phi_ * rho.topLeftCorner(n, n);
            out.bottomRightCorner(n, n) += 0.5 * phi_ * rho.bottomRightCorner(n, n);
            out.topRightCorner(n, n) -= 0.5 * phi_ * rho.topRightCorner(n, n);
            out.bottomLeftCorner(n, n) -= 0.5 * phi_ * rho.bottomLeftCorner(n, n);
        }
        return out;
    }

private:
    int n_;
    std::vector<DriveTerm> drives_;
    double kappa_{0.0}, down_{0.0}, up_{0.0}, phi_{0.0};
    VectorC g_diag_;
    VectorR sqrt_n_;
};

// Integrate the master equation and return rho at each entry of t_grid (ns,
// non-decreasing, starting at the time of rho0). Invariants are monitored, not
// enforced: a deviation beyond 10 * tol (per us for the trace) raises
// IntegrationError.
inline std::vector<DensityMatrix> evolve(const DensityMatrix& rho0, const EffectiveModel& model,
                                         const std::vector<DriveTerm>& drives, const LossRates& losses,
                                         const std::vector<double>& t_grid, const EvolveOptions& opt = {},
                                         OdeStats* stats = nullptr) {
    require(rho0.fock_dim() == model.fock_dim, "evolve: state and model truncations differ");
    require(!t_grid.empty() && t_grid.front() >= 0.0, "evolve: time grid must be non-empty and start at t >= 0");
    const LindbladRhs rhs(model, drives, losses);
    OdeOptions oo;
    oo.rtol = opt.tol;
    oo.atol = opt.atol;
    // Keep the step below a quarter of the shortest drive so no pulse is stepped over.
    for (const auto& d : drives)
        if (d.duration() > 0.0) oo.h_max = std::min(oo.h_max, 0.25 * d.duration());
    const auto ys = integrate_dopri5(rhs, rho0.matrix(), t_grid, oo, stats);

    std::vector<DensityMatrix> out;
    out.reserve(ys.size());
    const double tr0 = rho0.trace();
    for (std::size_t k = 0; k < ys.size(); ++k) {
        DensityMatrix r(ys[k], model.fock_dim);
        if (opt.check_invariants) {
            const double elapsed_us = (t_grid[k] - t_grid.front()) / units::kUs;
            const double budget = 10.0 * opt.tol * std::max(1.0, elapsed_us);
            if (std::abs(r.trace() - tr0) > budget) {
                throw IntegrationError("evolve: trace drift " + std::to_string(r.trace() - tr0) + " at t = " +
                                       std::to_string(t_grid[k]) + " ns");
            }
            const double me = r.min_eigenvalue();
            if (me < -std::max(10.0 * opt.tol, 1e-8)) {
                throw IntegrationError("evolve: positivity violated (min eigenvalue " + std::to_string(me) +
                                       ") at t = " + std::to_string(t_grid[k]) + " ns");
            }
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Convenience: state at a single final time.
inline DensityMatrix evolve_to(const DensityMatrix& rho0, const EffectiveModel& model,
                               const std::vector<DriveTerm>& drives, const LossRates& losses, double t0, double t1,
                               const EvolveOptions& opt = {}) {
    return evolve(rho0, model, drives, losses, {t0, t1}, opt).back();
}

// Tidy CSV of expectation values along a trajectory.
inline void write_trajectory_csv(std::ostream& os, const std::vector<double>& t,
                                 const std::vector<DensityMatrix>& traj) {
    require(t.size() == traj.size(), "write_trajectory_csv: size mismatch");
    os << "t_ns,p_e,n_mean,p0,purity\n";
    os.precision(12);
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << t[k] << ',' << traj[k].excited_population() << ',' << traj[k].photon_number() << ','
           << traj[k].vacuum_population() << ',' << traj[k].purity() << '\n';
    }
}

}  // namespace fluxcav

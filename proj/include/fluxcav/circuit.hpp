// circuit.hpp: truncated-basis fluxonium, transmon and harmonic-mode operators,
// and the coupled qubit-resonator Hamiltonians built from them.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/operators.hpp"

#include <cmath>
#include <string>
#include <variant>
#include <vector>

namespace fluxcav {

// Fluxonium energies in GHz. `phi_ext` is Phi_ext / Phi_0; the phase offset is 2*pi*phi_ext.
struct FluxoniumParams {
    double e_c{0.0};
    double e_l{0.0};
    double e_j{0.0};
    double phi_ext{0.0};
    int n_jj{0};  // junction-array length; recorded, not used by the Hamiltonian

    [[nodiscard]] double phase_offset() const { return kTwoPi * phi_ext; }

    void validate() const {
        require(e_c > 0.0 && std::isfinite(e_c), "fluxonium: e_c must be positive");
        require(e_l > 0.0 && std::isfinite(e_l), "fluxonium: e_l must be positive");
        require(e_j >= 0.0 && std::isfinite(e_j), "fluxonium: e_j must be non-negative");
        require(std::isfinite(phi_ext), "fluxonium: phi_ext must be finite");
    }
};

struct TransmonParams {
    double e_c{0.0};
    double e_j{0.0};
    int n_cutoff{15};  // charge basis spans n in [-n_cutoff, n_cutoff]

    [[nodiscard]] int dim() const { return 2 * n_cutoff + 1; }

    void validate() const {
        require(e_c > 0.0 && std::isfinite(e_c), "transmon: e_c must be positive");
        require(e_j > 0.0 && std::isfinite(e_j), "transmon: e_j must be positive");
    }
};

enum class ModeRole { storage, readout, other };

struct HarmonicModeParams {
    std::string name{"storage"};
    ModeRole role{ModeRole::storage};
    double bare_freq{0.0};   // GHz
    double coupling_g{0.0};  // GHz
    int fock_dim{2};

    void validate() const {
        require(bare_freq > 0.0 && std::isfinite(bare_freq), "mode '" + name + "': bare_freq must be positive");
        require(std::isfinite(coupling_g), "mode '" + name + "': coupling must be finite");
        require(fock_dim >= 2, "mode '" + name + "': fock_dim must be at least 2");
    }
};

using QubitParams = std::variant<FluxoniumParams, TransmonParams>;

enum class CouplingForm { full, rotating_wave };

// Full description of one device. The qubit is represented by its lowest
// `qubit_levels` eigenstates (0 keeps all of them), computed in a local basis of
// size `qubit_dim` (harmonic-oscillator states for the fluxonium; the transmon
// uses its own charge cutoff instead).
struct CircuitSpec {
    QubitParams qubit{FluxoniumParams{}};
    std::vector<HarmonicModeParams> modes;
    int qubit_dim{60};
    int qubit_levels{10};
    Eigen::Index max_product_dim{20000};

    [[nodiscard]] bool is_fluxonium() const { return std::holds_alternative<FluxoniumParams>(qubit); }
    [[nodiscard]] const FluxoniumParams& fluxonium() const { return std::get<FluxoniumParams>(qubit); }
    [[nodiscard]] FluxoniumParams& fluxonium() { return std::get<FluxoniumParams>(qubit); }
    [[nodiscard]] const TransmonParams& transmon() const { return std::get<TransmonParams>(qubit); }
    [[nodiscard]] TransmonParams& transmon() { return std::get<TransmonParams>(qubit); }

    [[nodiscard]] int local_qubit_dim() const { return is_fluxonium() ? qubit_dim : transmon().dim(); }
    [[nodiscard]] int retained_qubit_levels() const {
        const int local = local_qubit_dim();
        return (qubit_levels <= 0 || qubit_levels > local) ? local : qubit_levels;
    }

    [[nodiscard]] std::size_t storage_index() const {
        for (std::size_t k = 0; k < modes.size(); ++k)
            if (modes[k].role == ModeRole::storage) return k;
        throw InvalidParameter("circuit: no mode has the storage role");
    }

    [[nodiscard]] ProductBasis basis() const {
        std::vector<Eigen::Index> dims{retained_qubit_levels()};
        for (const auto& m : modes) dims.push_back(m.fock_dim);
        return ProductBasis(std::move(dims));
    }

    void validate() const {
        std::visit([](const auto& q) { q.validate(); }, qubit);
        require(!modes.empty(), "circuit: at least one harmonic mode required");
        for (const auto& m : modes) m.validate();
        (void)storage_index();
        if (is_fluxonium() && qubit_dim < 5) throw TruncationError("circuit: fluxonium basis dimension must be >= 5");
        const Eigen::Index total = basis().size();
        if (total > max_product_dim) {
            throw ResourceError("circuit: product dimension " + std::to_string(total) + " exceeds cap " +
                                std::to_string(max_product_dim));
        }
    }
};

// Phase, charge and Hamiltonian of an isolated qubit in its local basis.
struct QubitOperators {
    HermitianOperator phase;
    HermitianOperator charge;
    HermitianOperator hamiltonian;
};

// Fluxonium in the harmonic basis of its own LC oscillator
// (phi_zpf = (2 E_C / E_L)^{1/4}, n_zpf = 1 / (2 phi_zpf)). The cosine term is
// evaluated exactly on the truncated space from the eigendecomposition of phi.
inline QubitOperators build_fluxonium_operators(const FluxoniumParams& p, int dim) {
    p.validate();
    if (dim < 5) throw TruncationError("build_fluxonium_operators: dim must be >= 5");
    const double phi_zpf = std::pow(2.0 * p.e_c / p.e_l, 0.25);
    const double n_zpf = 1.0 / (2.0 * phi_zpf);
    const MatrixR a = ops::destroy(dim);
    const MatrixR ad = a.transpose();
    const MatrixR phi = phi_zpf * (a + ad);
    const MatrixR n_imag = n_zpf * (ad - a);  // charge = i * n_imag

    Eigen::SelfAdjointEigenSolver<MatrixR> es(phi);
    const VectorR cos_d = (es.eigenvalues().array() - p.phase_offset()).cos();
    const MatrixR cos_term = es.eigenvectors() * cos_d.asDiagonal() * es.eigenvectors().transpose();

    // n^2 = -(n_imag)^2 because n = i n_imag
    const MatrixR h = -4.0 * p.e_c * (n_imag * n_imag) + 0.5 * p.e_l * (phi * phi) - p.e_j * cos_term;
    return {HermitianOperator::from_real(phi), HermitianOperator(cplx(0.0, 1.0) * n_imag.cast<cplx>()),
            HermitianOperator::from_real(h)};
}

// Transmon in the charge basis: 4 E_C n^2 - (E_J/2) sum_n (|n><n+1| + h.c.).
// The phase operator is not defined in this basis; `phase` is left empty.
inline QubitOperators build_transmon_operators(const TransmonParams& p) {
    p.validate();
    if (p.n_cutoff < 5) throw TruncationError("build_transmon_operators: n_cutoff must be >= 5");
    const int d = p.dim();
    MatrixR n = MatrixR::Zero(d, d);
    MatrixR h = MatrixR::Zero(d, d);
    for (int k = 0; k < d; ++k) {
        const double q = k - p.n_cutoff;
        n(k, k) = q;
        h(k, k) = 4.0 * p.e_c * q * q;
        if (k + 1 < d) {
            h(k, k + 1) = -0.5 * p.e_j;
            h(k + 1, k) = -0.5 * p.e_j;
        }
    }
    return {HermitianOperator{}, HermitianOperator::from_real(n), HermitianOperator::from_real(h)};
}

// A qubit reduced to its lowest eigenstates: energies plus the charge operator
// expressed in that eigenbasis. Two-level and harmonic stubs are built directly.
struct QubitSpectrum {
    VectorR energies;
    MatrixC charge;
    double coupling_sign{-1.0};  // -1: -i g n (a - a†) (fluxonium); +1: +i g n (a - a†) (transmon)
};

inline QubitSpectrum qubit_spectrum(const CircuitSpec& spec) {
    spec.validate();
    const QubitOperators q = spec.is_fluxonium() ? build_fluxonium_operators(spec.fluxonium(), spec.qubit_dim)
                                                 : build_transmon_operators(spec.transmon());
    const int levels = spec.retained_qubit_levels();
    Eigen::SelfAdjointEigenSolver<MatrixR> es(q.hamiltonian.matrix().real());
    if (es.info() != Eigen::Success) throw Error("qubit_spectrum: eigendecomposition failed");
    const MatrixR v = es.eigenvectors().leftCols(levels);
    QubitSpectrum out;
    out.energies = es.eigenvalues().head(levels);
    // The local charge operator is either purely real (transmon) or purely imaginary
    // (fluxonium); rotating each part separately keeps the zero part exactly zero.
    const MatrixR re = v.transpose() * q.charge.matrix().real() * v;
    const MatrixR im = v.transpose() * q.charge.matrix().imag() * v;
    out.charge.resize(levels, levels);
    out.charge.real() = re;
    out.charge.imag() = im;
    out.coupling_sign = spec.is_fluxonium() ? -1.0 : +1.0;
    return out;
}

// H = H_q ⊗ I + sum_k I ⊗ w_k a_k† a_k + sign * i sum_k g_k n ⊗ (a_k - a_k†),
// qubit index slowest. With CouplingForm::rotating_wave only excitation-conserving
// terms of the coupling are kept.
inline HermitianOperator build_coupled_hamiltonian(const QubitSpectrum& q, const std::vector<HarmonicModeParams>& modes,
                                                   CouplingForm form = CouplingForm::full,
                                                   Eigen::Index max_dim = 20000) {
    require(q.energies.size() > 0 && q.charge.rows() == q.energies.size() && q.charge.cols() == q.energies.size(),
            "build_coupled_hamiltonian: qubit spectrum and charge operator disagree");
    std::vector<Eigen::Index> dims{q.energies.size()};
    for (const auto& m : modes) {
        m.validate();
        dims.push_back(m.fock_dim);
    }
    const ProductBasis basis(dims);
    if (basis.size() > max_dim) {
        throw ResourceError("build_coupled_hamiltonian: product dimension " + std::to_string(basis.size()) +
                            " exceeds cap " + std::to_string(max_dim));
    }

    MatrixC h = ops::embed(q.energies.cast<cplx>().asDiagonal().toDenseMatrix(), 0, basis.dims());
    // Rotating-wave pieces: lower triangle raises the qubit, upper triangle lowers it.
    const MatrixC charge_up = q.charge.triangularView<Eigen::StrictlyLower>();
    const MatrixC charge_down = q.charge.triangularView<Eigen::StrictlyUpper>();
    for (std::size_t k = 0; k < modes.size(); ++k) {
        const auto& m = modes[k];
        const MatrixC a = ops::destroy(m.fock_dim).cast<cplx>();
        const MatrixC ad = a.adjoint();
        h += m.bare_freq * ops::embed((ad * a).eval(), k + 1, dims);
        const cplx pre = q.coupling_sign * cplx(0.0, 1.0) * m.coupling_g;
        if (form == CouplingForm::full) {
            h += pre * ops::embed_pair(q.charge, 0, (a - ad).eval(), k + 1, dims);
        } else {
            h += pre * (ops::embed_pair(charge_up, 0, a, k + 1, dims) - ops::embed_pair(charge_down, 0, ad, k + 1, dims));
        }
    }
    return HermitianOperator(std::move(h), 1e-10);
}

inline HermitianOperator build_coupled_hamiltonian(const CircuitSpec& spec, CouplingForm form = CouplingForm::full) {
    spec.validate();
    return build_coupled_hamiltonian(qubit_spectrum(spec), spec.modes, form, spec.max_product_dim);
}

// Transmon-resonator Hamiltonian in the raw charge ⊗ Fock basis.
inline HermitianOperator build_transmon_hamiltonian(const TransmonParams& p, const HarmonicModeParams& mode) {
    const QubitOperators q = build_transmon_operators(p);
    mode.validate();
    QubitSpectrum raw;
    raw.energies = VectorR::Zero(p.dim());
    raw.charge = q.charge.matrix();
    raw.coupling_sign = +1.0;
    HermitianOperator coupled = build_coupled_hamiltonian(raw, {mode});
    const std::vector<Eigen::Index> dims{p.dim(), mode.fock_dim};
    MatrixC h = coupled.matrix() + ops::embed(q.hamiltonian.matrix(), 0, dims);
    return HermitianOperator(std::move(h), 1e-10);
}

}  // namespace fluxcav

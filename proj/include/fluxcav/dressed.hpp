// dressed.hpp: dressed-state labeling and extraction of effective cavity-QED parameters.

#pragma once

#include "fluxcav/circuit.hpp"
#include "fluxcav/core.hpp"
#include "fluxcav/parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace fluxcav {

struct DressedState {
    int qubit{0};
    std::vector<int> photons;
    double energy{0.0};   // GHz
    double overlap{0.0};  // |<bare|dressed>|^2
    Eigen::Index eigen_index{-1};
};

// Labeled eigenstates of a coupled Hamiltonian. Labels are (qubit level, photon tuple)
// in the order of CircuitSpec::modes.
class DressedSpectrum {
public:
    DressedSpectrum() = default;
    DressedSpectrum(std::vector<DressedState> entries, std::size_t storage_slot)
        : entries_(std::move(entries)), storage_slot_(storage_slot) {
        for (std::size_t k = 0; k < entries_.size(); ++k) index_.emplace(key(entries_[k].qubit, entries_[k].photons), k);
    }

    [[nodiscard]] const std::vector<DressedState>& entries() const { return entries_; }
    [[nodiscard]] std::size_t storage_slot() const { return storage_slot_; }
    [[nodiscard]] std::size_t num_modes() const { return entries_.empty() ? 0 : entries_.front().photons.size(); }
    [[nodiscard]] const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

    // Eigenvectors of the retained states (columns, indexed by eigen_index); empty
    // unless requested from diagonalize_and_label.
    [[nodiscard]] const MatrixC* vectors() const { return vectors_.get(); }
    void set_vectors(MatrixC v) { vectors_ = std::make_shared<const MatrixC>(std::move(v)); }

    [[nodiscard]] const DressedState* find(int qubit, const std::vector<int>& photons) const {
        auto it = index_.find(key(qubit, photons));
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    // State with `n` photons in `slot` and all other modes empty.
    [[nodiscard]] const DressedState& at(int qubit, int n, std::optional<std::size_t> slot = std::nullopt) const {
        std::vector<int> photons(num_modes(), 0);
        const std::size_t s = slot.value_or(storage_slot_);
        if (s >= photons.size()) throw IncompleteSpectrum("dressed spectrum: mode slot out of range");
        photons[s] = n;
        const DressedState* st = find(qubit, photons);
        if (!st) {
            throw IncompleteSpectrum("dressed spectrum: label (q=" + std::to_string(qubit) + ", n=" + std::to_string(n) +
                                     " in mode " + std::to_string(s) + ") not present");
        }
        return *st;
    }

private:
    static std::vector<int> key(int qubit, const std::vector<int>& photons) {
        std::vector<int> k{qubit};
        k.insert(k.end(), photons.begin(), photons.end());
        return k;
    }

    std::vector<DressedState> entries_;
    std::size_t storage_slot_{0};
    std::map<std::vector<int>, std::size_t> index_;
    std::vector<std::string> warnings_;
    std::shared_ptr<const MatrixC> vectors_;
};

namespace detail {

struct Eigensystem {
    VectorR values;
    MatrixR overlap;  // |V|^2, rows = bare states, cols = eigenstates
    MatrixC vectors;
};

inline Eigensystem eigensystem(const HermitianOperator& h, Eigen::Index n_levels, bool keep_vectors) {
    Eigensystem out;
    if (h.is_real()) {
        Eigen::SelfAdjointEigenSolver<MatrixR> es(h.matrix().real());
        if (es.info() != Eigen::Success) throw Error("diagonalize: eigensolver failed");
        out.values = es.eigenvalues().head(n_levels);
        out.overlap = es.eigenvectors().leftCols(n_levels).array().square().matrix();
        if (keep_vectors) out.vectors = es.eigenvectors().leftCols(n_levels).cast<cplx>();
    } else {
        Eigen::SelfAdjointEigenSolver<MatrixC> es(h.matrix());
        if (es.info() != Eigen::Success) throw Error("diagonalize: eigensolver failed");
        out.values = es.eigenvalues().head(n_levels);
        out.overlap = es.eigenvectors().leftCols(n_levels).cwiseAbs2();
        if (keep_vectors) out.vectors = es.eigenvectors().leftCols(n_levels);
    }
    return out;
}

}  // namespace detail

// Diagonalize `h` (expressed in bare_basis.basis(), i.e. qubit eigenstates ⊗ Fock
// states) and label the lowest n_levels eigenstates (all when n_levels <= 0).
// Candidates are assigned greedily by descending overlap, ties broken by the
// lexicographic order of the bare label; an eigenstate whose preferred label is
// taken falls back to its best remaining free label.
inline DressedSpectrum diagonalize_and_label(const HermitianOperator& h, const CircuitSpec& bare_basis,
                                             Eigen::Index n_levels = 0, bool keep_vectors = false) {
    const ProductBasis basis = bare_basis.basis();
    if (h.dim() != basis.size()) throw InvalidParameter("diagonalize_and_label: Hamiltonian does not match basis");
    if (n_levels <= 0) n_levels = h.dim();
    require(n_levels <= h.dim(), "diagonalize_and_label: n_levels exceeds dimension");

    const detail::Eigensystem es = detail::eigensystem(h, n_levels, keep_vectors);
    const Eigen::Index dim = h.dim();

    struct Candidate {
        double overlap;
        Eigen::Index bare;
        Eigen::Index eig;
    };
    std::vector<Candidate> cands;
    cands.reserve(static_cast<std::size_t>(n_levels) * 4);
    constexpr double kFloor = 1e-2;
    for (Eigen::Index k = 0; k < n_levels; ++k)
        for (Eigen::Index b = 0; b < dim; ++b)
            if (es.overlap(b, k) >= kFloor) cands.push_back({es.overlap(b, k), b, k});
    // Flat bare index order equals lexicographic (qubit, photons) order.
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        if (x.overlap != y.overlap) return x.overlap > y.overlap;
        if (x.bare != y.bare) return x.bare < y.bare;
        return x.eig < y.eig;
    });

    std::vector<Eigen::Index> label_of(static_cast<std::size_t>(n_levels), -1);
    std::vector<char> taken(static_cast<std::size_t>(dim), 0);
    for (const auto& c : cands) {
        if (label_of[c.eig] >= 0 || taken[c.bare]) continue;
        label_of[c.eig] = c.bare;
        taken[c.bare] = 1;
    }
    for (Eigen::Index k = 0; k < n_levels; ++k) {
        if (label_of[k] >= 0) continue;
        Eigen::Index best = -1;
        for (Eigen::Index b = 0; b < dim; ++b)
            if (!taken[b] && (best < 0 || es.overlap(b, k) > es.overlap(best, k))) best = b;
        label_of[k] = best;
        taken[best] = 1;
    }

    std::vector<DressedState> entries;
    entries.reserve(static_cast<std::size_t>(n_levels));
    for (Eigen::Index k = 0; k < n_levels; ++k) {
        const auto d = basis.digits(label_of[k]);
        DressedState st;
        st.qubit = d[0];
        st.photons.assign(d.begin() + 1, d.end());
        st.energy = es.values(k);
        st.overlap = es.overlap(label_of[k], k);
        st.eigen_index = k;
        entries.push_back(std::move(st));
    }
    DressedSpectrum out(std::move(entries), bare_basis.storage_index());
    if (keep_vectors) out.set_vectors(es.vectors);
    return out;
}

struct EffectiveParams {
    double omega_qubit{0.0};    // Omega: E(e,0) - E(g,0)
    double omega_storage{0.0};  // omega: E(g,1) - E(g,0)
    double chi{0.0};
    double kerr{0.0};  // K_2
    std::vector<std::pair<int, double>> kerr_higher;  // (p, K_p), p >= 2 ascending
    double hybridization_overlap{0.0};
    double chi_readout{std::numeric_limits<double>::quiet_NaN()};
    std::vector<std::string> warnings;
};

// K_p = sum_{j=0}^{p} (-1)^{j+p} C(p, j) E(g, j)
inline double kerr_coefficient(const DressedSpectrum& s, int p) {
    require(p >= 0, "kerr_coefficient: p must be non-negative");
    // Highest level first, so p = 2 reproduces E2 - 2 E1 + E0 bit for bit.
    double sum = 0.0;
    double binom = 1.0;
    for (int j = p; j >= 0; --j) {
        if (j < p) binom = binom * (j + 1) / (p - j);
        const double sign = ((j + p) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * binom * s.at(0, j).energy;
    }
    return sum;
}

inline double dispersive_shift(const DressedSpectrum& s, std::size_t slot) {
    return (s.at(1, 1, slot).energy - s.at(1, 0, slot).energy) - (s.at(0, 1, slot).energy - s.at(0, 0, slot).energy);
}

inline EffectiveParams extract_effective_params(const DressedSpectrum& s, int max_p = 2,
                                                std::optional<std::size_t> readout_slot = std::nullopt) {
    require(max_p >= 2, "extract_effective_params: max_p must be >= 2");
    EffectiveParams out;
    const std::size_t st = s.storage_slot();
    const double e_g0 = s.at(0, 0).energy;
    out.omega_qubit = s.at(1, 0).energy - e_g0;
    out.omega_storage = s.at(0, 1).energy - e_g0;
    out.chi = dispersive_shift(s, st);
    out.kerr = s.at(0, 2).energy - 2.0 * s.at(0, 1).energy + e_g0;
    for (int p = 2; p <= max_p; ++p) out.kerr_higher.emplace_back(p, p == 2 ? out.kerr : kerr_coefficient(s, p));

    const DressedState* four[] = {&s.at(0, 0), &s.at(1, 0), &s.at(0, 1), &s.at(1, 1)};
    double acc = 0.0;
    for (const auto* d : four) acc += d->overlap;
    out.hybridization_overlap = acc / 4.0;
    for (int n = 0; n <= max_p; ++n) {
        const double ov = s.at(0, n).overlap;
        if (ov < 0.5) out.warnings.push_back("ambiguous label (g," + std::to_string(n) + "): overlap " + std::to_string(ov));
    }
    for (const auto* d : {four[1], four[3]}) {
        if (d->overlap < 0.5) {
            out.warnings.push_back("ambiguous label (e," + std::to_string(d->photons[st]) +
                                   "): overlap " + std::to_string(d->overlap));
        }
    }
    if (readout_slot && *readout_slot != st) out.chi_readout = dispersive_shift(s, *readout_slot);
    return out;
}

inline std::optional<std::size_t> readout_slot_of(const CircuitSpec& spec) {
    for (std::size_t k = 0; k < spec.modes.size(); ++k)
        if (spec.modes[k].role == ModeRole::readout) return k;
    return std::nullopt;
}

// Full pipeline for one parameter point.
inline EffectiveParams effective_params(const CircuitSpec& spec, int max_p = 2) {
    const auto h = build_coupled_hamiltonian(spec);
    return extract_effective_params(diagonalize_and_label(h, spec), max_p, readout_slot_of(spec));
}

// Truncation-enlarged copy of a spec used for convergence margins.
inline CircuitSpec enlarged(const CircuitSpec& spec, int extra_levels = 4, int extra_photons = 4) {
    CircuitSpec big = spec;
    if (big.is_fluxonium()) big.qubit_dim += 20;
    else big.transmon().n_cutoff += 5;
    big.qubit_levels = spec.retained_qubit_levels() + extra_levels;
    big.modes[big.storage_index()].fock_dim += extra_photons;
    big.max_product_dim = std::max<Eigen::Index>(big.max_product_dim, big.basis().size());
    return big;
}

struct FluxSweepOptions {
    int max_p{2};
    int jobs{1};
    // Number of grid points (spread evenly, endpoints included) at which the
    // convergence margin is evaluated with an enlarged truncation; 0 disables it.
    int margin_points{3};
};

struct FluxSweepResult {
    std::vector<double> flux_grid;
    std::vector<EffectiveParams> params;
    std::vector<std::array<double, 3>> transitions;  // g->e, g->f, g->h (GHz), dressed, empty cavity
    std::vector<double> convergence_margin;  // relative change of chi under enlarged truncation; NaN if not sampled
    std::vector<std::string> warnings;
};

inline FluxSweepResult flux_sweep(const CircuitSpec& spec, const std::vector<double>& flux_grid,
                                  const FluxSweepOptions& opt = {}) {
    require(!flux_grid.empty(), "flux_sweep: flux grid is empty");
    require(spec.is_fluxonium(), "flux_sweep: requires a fluxonium qubit");
    require(std::is_sorted(flux_grid.begin(), flux_grid.end()), "flux_sweep: flux grid must be monotone");
    require(spec.retained_qubit_levels() >= 4, "flux_sweep: need at least 4 qubit levels for transitions");
    spec.validate();

    struct Point {
        EffectiveParams params;
        std::array<double, 3> transitions{};
        double margin{std::numeric_limits<double>::quiet_NaN()};
    };
    const auto readout = readout_slot_of(spec);
    std::vector<char> sample(flux_grid.size(), 0);
    if (opt.margin_points > 0) {
        const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(opt.margin_points), flux_grid.size());
        for (std::size_t j = 0; j < m; ++j)
            sample[m == 1 ? 0 : j * (flux_grid.size() - 1) / (m - 1)] = 1;
    }
    auto points = parallel_map(flux_grid.size(), opt.jobs, [&](std::size_t i) {
        CircuitSpec local = spec;
        local.fluxonium().phi_ext = flux_grid[i];
        const auto ds = diagonalize_and_label(build_coupled_hamiltonian(local), local);
        Point p;
        p.params = extract_effective_params(ds, opt.max_p, readout);
        const double e0 = ds.at(0, 0).energy;
        for (int q = 1; q <= 3; ++q) p.transitions[q - 1] = ds.at(q, 0).energy - e0;
        if (sample[i]) {
            const CircuitSpec big = enlarged(local);
            const auto ref = extract_effective_params(diagonalize_and_label(build_coupled_hamiltonian(big), big), 2);
            p.margin = std::abs(ref.chi - p.params.chi) / std::max(std::abs(ref.chi), 1e-15);
        }
        return p;
    });

    FluxSweepResult out;
    out.flux_grid = flux_grid;
    for (std::size_t i = 0; i < points.size(); ++i) {
        out.params.push_back(std::move(points[i].params));
        out.transitions.push_back(points[i].transitions);
        out.convergence_margin.push_back(points[i].margin);
        for (const auto& w : out.params.back().warnings)
            out.warnings.push_back("flux " + std::to_string(flux_grid[i]) + ": " + w);
    }
    return out;
}

// Linear interpolation of the sign changes of `y` on grid `x`.
inline std::vector<double> zero_crossings(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size(), "zero_crossings: size mismatch");
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (y[i] == 0.0) out.push_back(x[i]);
        else if (y[i] * y[i + 1] < 0.0) out.push_back(x[i] - y[i] * (x[i + 1] - x[i]) / (y[i + 1] - y[i]));
    }
    if (!y.empty() && y.back() == 0.0) out.push_back(x.back());
    return out;
}

struct PhotonDeviation {
    std::vector<int> n;
    std::vector<double> deviation;  // omega(n) - omega(0), GHz
    std::vector<double> kerr_only;  // n * K_2
};

// omega(n) = E(g, n+1) - E(g, n); deviation from omega(0) compared with the K_2-only line.
inline PhotonDeviation photon_number_deviation(const DressedSpectrum& ds, int n_max) {
    require(n_max >= 0, "photon_number_deviation: n_max must be non-negative");
    const double k2 = ds.at(0, 2).energy - 2.0 * ds.at(0, 1).energy + ds.at(0, 0).energy;
    const double w0 = ds.at(0, 1).energy - ds.at(0, 0).energy;
    PhotonDeviation out;
    for (int n = 0; n <= n_max; ++n) {
        out.n.push_back(n);
        out.deviation.push_back(ds.at(0, n + 1).energy - ds.at(0, n).energy - w0);
        out.kerr_only.push_back(n * k2);
    }
    return out;
}

inline PhotonDeviation photon_number_deviation(const CircuitSpec& spec, int n_max) {
    require(n_max >= 0, "photon_number_deviation: n_max must be non-negative");
    const auto& storage = spec.modes.at(spec.storage_index());
    // The top two Fock levels carry truncation artifacts; E(n_max + 1) must sit below them.
    if (storage.fock_dim < n_max + 4) {
        throw TruncationError("photon_number_deviation: storage fock_dim must be at least n_max + 4 (need " +
                              std::to_string(n_max + 4) + ")");
    }
    return photon_number_deviation(diagonalize_and_label(build_coupled_hamiltonian(spec), spec), n_max);
}

// CSV export: one row per flux point. Frequencies in MHz, Kerr terms in kHz.
inline void write_flux_sweep_csv(std::ostream& os, const FluxSweepResult& r) {
    os << "flux_phi0,omega_qubit_mhz,omega_storage_mhz,chi_mhz,kerr_khz";
    const std::size_t nk = r.params.empty() ? 0 : r.params.front().kerr_higher.size();
    for (std::size_t j = 1; j < nk; ++j) os << ",k" << r.params.front().kerr_higher[j].first << "_khz";
    os << ",overlap,ge_mhz,gf_mhz,gh_mhz,convergence_margin\n";
    os.precision(12);
    for (std::size_t i = 0; i < r.flux_grid.size(); ++i) {
        const auto& p = r.params[i];
        os << r.flux_grid[i] << ',' << units::to_mhz(p.omega_qubit) << ',' << units::to_mhz(p.omega_storage) << ','
           << units::to_mhz(p.chi) << ',' << units::to_khz(p.kerr);
        for (std::size_t j = 1; j < p.kerr_higher.size(); ++j) os << ',' << units::to_khz(p.kerr_higher[j].second);
        os << ',' << p.hybridization_overlap;
        for (double t : r.transitions[i]) os << ',' << units::to_mhz(t);
        os << ',' << r.convergence_margin[i] << '\n';
    }
}

}  // namespace fluxcav

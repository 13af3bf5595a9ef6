// design.hpp: transmon chi/K bound, literature check, fixed-chi sweeps and the
// zero-Kerr fluxonium search.

#pragma once

#include "fluxcav/circuit.hpp"
#include "fluxcav/core.hpp"
#include "fluxcav/dressed.hpp"
#include "fluxcav/optimize.hpp"
#include "fluxcav/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace fluxcav {

// ------------------------------------------------------------ perturbative transmon

struct PerturbativeTransmon {
    double e_c{0.0};    // GHz
    double g{0.0};      // GHz, transmon-mode coupling
    double delta{0.0};  // GHz, qubit minus cavity

    void validate() const {
        require(delta != 0.0, "PerturbativeTransmon: delta must be non-zero");
        require(delta != e_c, "PerturbativeTransmon: delta = e_c is singular");
    }
};

struct ChiKerr {
    double chi{0.0};
    double kerr{0.0};
};

// chi ~ -2 g^2 E_C / (Delta (Delta - E_C)),  K ~ -E_C (g / Delta)^4
inline ChiKerr perturbative_chi_kerr(const PerturbativeTransmon& p) {
    p.validate();
    return {-2.0 * p.g * p.g * p.e_c / (p.delta * (p.delta - p.e_c)), -p.e_c * std::pow(p.g / p.delta, 4)};
}

// |K| >= chi^2 / (4 E_C,max)
inline double transmon_bound(double chi, double e_c_max = 0.530) {
    require(e_c_max > 0.0, "transmon_bound: e_c_max must be positive");
    return chi * chi / (4.0 * e_c_max);
}

struct BoundCurve {
    std::vector<double> chi_grid;  // GHz
    std::vector<double> k_min;     // GHz
    double e_c_max{0.530};
};

inline BoundCurve bound_curve(const std::vector<double>& chi_grid, double e_c_max = 0.530) {
    BoundCurve b;
    b.chi_grid = chi_grid;
    b.e_c_max = e_c_max;
    for (double c : chi_grid) b.k_min.push_back(transmon_bound(c, e_c_max));
    return b;
}

// ------------------------------------------------------------ literature table

enum class KerrSource { data, simulation };

struct LiteratureEntry {
    double k_abs{0.0};    // kHz
    double chi_abs{0.0};  // MHz
    KerrSource k_type{KerrSource::data};
    std::string citation;
};

struct LiteratureCheck {
    LiteratureEntry entry;
    double bound_khz{0.0};
    bool pass{false};
};

inline std::vector<LiteratureCheck> check_literature(const std::vector<LiteratureEntry>& entries,
                                                     double e_c_max = 0.530) {
    std::vector<LiteratureCheck> out;
    for (const auto& e : entries) {
        require(e.k_abs > 0.0 && e.chi_abs > 0.0, "check_literature: entries must be positive (" + e.citation + ")");
        const double bound = units::to_khz(transmon_bound(e.chi_abs * units::kMHz, e_c_max));
        out.push_back({e, bound, e.k_abs >= bound});
    }
    return out;
}

// CSV with header k_abs_khz,chi_abs_mhz,k_type,citation.
inline std::vector<LiteratureEntry> read_literature_csv(std::istream& is) {
    std::vector<LiteratureEntry> out;
    std::string line;
    bool header = true;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            continue;
        }
        std::stringstream ss(line);
        std::string k, chi, type, cite;
        if (!std::getline(ss, k, ',') || !std::getline(ss, chi, ',') || !std::getline(ss, type, ',') ||
            !std::getline(ss, cite)) {
            throw InvalidParameter("literature csv: malformed line " + std::to_string(lineno));
        }
        LiteratureEntry e;
        try {
            e.k_abs = std::stod(k);
            e.chi_abs = std::stod(chi);
        } catch (const std::exception&) {
            throw InvalidParameter("literature csv: bad number on line " + std::to_string(lineno));
        }
        if (type == "data") e.k_type = KerrSource::data;
        else if (type == "simulation") e.k_type = KerrSource::simulation;
        else throw InvalidParameter("literature csv: unknown k_type '" + type + "' on line " + std::to_string(lineno));
        e.citation = cite;
        out.push_back(e);
    }
    return out;
}

// ------------------------------------------------------------ fixed-chi sweeps

// Isolated-qubit g->e frequency.
inline double qubit_ge_frequency(const CircuitSpec& spec) {
    const auto q = qubit_spectrum(spec);
    return q.energies(1) - q.energies(0);
}

inline CircuitSpec with_coupling(CircuitSpec spec, double g) {
    spec.modes[spec.storage_index()].coupling_g = g;
    return spec;
}

struct CouplingSolution {
    double g{0.0};
    EffectiveParams params;
    bool ok{false};
    std::string note;
};

// Bisection on g for |chi(g)| = chi_target. The bracket comes from chi ~ g^2
// scaling and is widened geometrically until it straddles the target.
inline CouplingSolution solve_coupling(const CircuitSpec& spec, double chi_target, double g_guess,
                                       double rel_tol = 1e-7) {
    require(chi_target > 0.0, "solve_coupling: chi_target must be positive");
    require(g_guess > 0.0, "solve_coupling: g_guess must be positive");
    auto params_at = [&](double g) { return effective_params(with_coupling(spec, g)); };
    auto excess = [&](double g) { return std::abs(params_at(g).chi) - chi_target; };

    CouplingSolution out;
    double g = g_guess;
    for (int it = 0; it < 3; ++it) {
        const double c = std::abs(params_at(g).chi);
        if (!(c > 0.0) || !std::isfinite(c)) break;
        g *= std::clamp(std::sqrt(chi_target / c), 0.25, 4.0);
    }
    double lo = g / 1.05, hi = g * 1.05;
    double flo = excess(lo), fhi = excess(hi);
    for (int it = 0; it < 20 && flo * fhi > 0.0; ++it) {
        if (flo > 0.0) {
            hi = lo;
            fhi = flo;
            lo /= 1.5;
            flo = excess(lo);
        } else {
            lo = hi;
            flo = fhi;
            hi *= 1.5;
            fhi = excess(hi);
        }
    }
    if (flo * fhi > 0.0) {
        out.note = "coupling root not bracketed";
        out.g = g;
        out.params = params_at(g);
        return out;
    }
    for (int it = 0; it < 200 && (hi - lo) > rel_tol * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = excess(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    out.g = 0.5 * (lo + hi);
    out.params = params_at(out.g);
    out.ok = true;
    return out;
}

struct FixedChiPoint {
    double delta{0.0};
    double cavity_freq{0.0};
    double g{0.0};
    double chi{0.0};
    double kerr{0.0};
    double overlap{0.0};
    bool ok{false};
    std::string note;
};

// Which qubit frequency the detuning is measured from. `dressed` uses Omega of the
// coupled system (so the cavity position is solved self-consistently with g);
// `bare` uses the isolated qubit's g->e transition.
enum class DeltaConvention { dressed, bare };

struct FixedChiOptions {
    DeltaConvention convention{DeltaConvention::dressed};
    int jobs{1};
    int max_iter{30};
    double freq_tol{1e-9};  // GHz, self-consistency of the cavity position
};

namespace detail {

inline FixedChiPoint fixed_chi_point(const CircuitSpec& spec_template, double delta, double chi_target, double w_q,
                                     double g0, const FixedChiOptions& opt) {
    FixedChiPoint p;
    p.delta = delta;
    CircuitSpec s = spec_template;
    auto& mode = s.modes[s.storage_index()];
    double w_c = w_q - delta;
    double g = g0;
    try {
        for (int it = 0; it < opt.max_iter; ++it) {
            if (!(w_c > 0.0)) {
                p.note = "cavity frequency would be non-positive";
                return p;
            }
            mode.bare_freq = w_c;
            const auto sol = solve_coupling(s, chi_target, g);
            g = sol.g;
            p.cavity_freq = w_c;
            p.g = sol.g;
            p.chi = sol.params.chi;
            p.kerr = sol.params.kerr;
            p.overlap = sol.params.hybridization_overlap;
            p.ok = sol.ok;
            p.note = sol.note;
            if (!sol.ok || opt.convention == DeltaConvention::bare) return p;
            const double next = sol.params.omega_qubit - delta;
            if (std::abs(next - w_c) < opt.freq_tol) return p;
            w_c = next;
        }
        p.ok = false;
        p.note = "cavity position did not settle";
    } catch (const IncompleteSpectrum& e) {
        p.ok = false;
        p.note = e.what();
    }
    return p;
}

}  // namespace detail

// For each detuning, place the storage so that (qubit frequency) - (bare cavity
// frequency) = delta and tune g so that |chi| = chi_target.
inline std::vector<FixedChiPoint> sweep_fixed_chi(const CircuitSpec& spec_template, const std::vector<double>& delta_grid,
                                                  double chi_target, const FixedChiOptions& opt = {}) {
    spec_template.validate();
    require(!delta_grid.empty(), "sweep_fixed_chi: empty detuning grid");
    require(chi_target > 0.0, "sweep_fixed_chi: chi_target must be positive");
    const double w_q = qubit_ge_frequency(spec_template);
    const double g0 = std::max(std::abs(spec_template.modes[spec_template.storage_index()].coupling_g), 1e-3);
    return parallel_map(delta_grid.size(), opt.jobs, [&](std::size_t i) {
        return detail::fixed_chi_point(spec_template, delta_grid[i], chi_target, w_q, g0, opt);
    });
}

inline void write_fixed_chi_csv(std::ostream& os, const std::vector<FixedChiPoint>& pts) {
    os << "delta_mhz,cavity_mhz,g_mhz,chi_mhz,kerr_khz,overlap,ok,note\n";
    os.precision(12);
    for (const auto& p : pts) {
        os << units::to_mhz(p.delta) << ',' << units::to_mhz(p.cavity_freq) << ',' << units::to_mhz(p.g) << ',' << units::to_mhz(p.chi) << ','
           << units::to_khz(p.kerr) << ',' << p.overlap << ',' << (p.ok ? 1 : 0) << ',' << p.note << '\n';
    }
}

// ------------------------------------------------------------ zero-Kerr search

struct Bounds {
    double lo{0.0}, hi{0.0};
    [[nodiscard]] double clamp(double x) const { return std::clamp(x, lo, hi); }
    [[nodiscard]] bool contains(double x) const { return x >= lo && x <= hi; }
};

struct DesignSearchSpace {
    Bounds e_c{0.8, 1.6};
    Bounds e_l{0.3, 0.9};
    Bounds e_j{2.0, 4.5};
    Bounds cavity_freq{0.5, 8.0};
    Bounds g{1e-4, 0.5};
};

struct DesignOptions {
    int max_evals{400};
    double chi_tol{0.02};  // relative
    unsigned seed{0};      // recorded; the search itself is deterministic
};

struct DesignResult {
    CircuitSpec params;
    double chi{0.0};
    double kerr{0.0};
    double overlap{0.0};
    std::vector<std::pair<int, double>> kerr_higher;
    bool converged{false};
    int evals{0};
    std::string note;
};

// Outer simplex over (E_C, E_L, E_J, cavity frequency) starting from `seed_spec`,
// inner bisection on g for |chi| = chi_target; minimizes |K| with a penalty when the
// overlap drops below overlap_min. The reported numbers are recomputed at the
// returned parameters.
inline DesignResult optimize_zero_kerr(const CircuitSpec& seed_spec, const DesignSearchSpace& space, double chi_target,
                                       double overlap_min, const DesignOptions& opt = {}) {
    require(chi_target > 0.0, "optimize_zero_kerr: chi_target must be positive");
    require(seed_spec.is_fluxonium(), "optimize_zero_kerr: requires a fluxonium qubit");
    seed_spec.validate();
    const std::size_t st = seed_spec.storage_index();

    const Bounds* box[] = {&space.e_c, &space.e_l, &space.e_j, &space.cavity_freq};
    auto make = [&](const VectorR& x) {
        CircuitSpec s = seed_spec;
        auto& f = s.fluxonium();
        f.e_c = box[0]->clamp(x(0));
        f.e_l = box[1]->clamp(x(1));
        f.e_j = box[2]->clamp(x(2));
        s.modes[st].bare_freq = box[3]->clamp(x(3));
        return s;
    };
    double g_hint = std::max(std::abs(seed_spec.modes[st].coupling_g), 1e-3);
    auto evaluate = [&](const VectorR& x) -> double {
        double penalty = 0.0;
        for (int k = 0; k < 4; ++k) penalty += std::pow(std::max(0.0, std::abs(x(k) - box[k]->clamp(x(k)))), 2);
        try {
            const CircuitSpec s = make(x);
            const auto sol = solve_coupling(s, chi_target, g_hint, 1e-6);
            if (!sol.ok || !space.g.contains(sol.g)) return 1.0 + penalty;
            g_hint = sol.g;
            const double short_fall = std::max(0.0, overlap_min - sol.params.hybridization_overlap);
            // |K| in kHz keeps the objective O(1).
            return std::abs(units::to_khz(sol.params.kerr)) + 1e3 * short_fall + 1e3 * penalty;
        } catch (const Error&) {
            return 1e6;
        }
    };

    const auto& f0 = seed_spec.fluxonium();
    VectorR x0(4);
    x0 << f0.e_c, f0.e_l, f0.e_j, seed_spec.modes[st].bare_freq;
    VectorR steps(4);
    steps << 0.02 * f0.e_c, 0.02 * f0.e_l, 0.02 * f0.e_j, 0.05;
    NelderMeadOptions nm;
    nm.max_evals = opt.max_evals;
    nm.f_tol = 1e-6;
    nm.x_tol = 1e-7;
    const auto r = nelder_mead(evaluate, x0, nm, steps);

    DesignResult out;
    out.evals = r.evals;
    CircuitSpec best = make(r.x);
    const auto sol = solve_coupling(best, chi_target, g_hint, 1e-9);
    best = with_coupling(best, sol.g);
    // Re-verify from scratch at the returned parameters.
    const auto check = effective_params(best, 5);
    out.params = best;
    out.chi = check.chi;
    out.kerr = check.kerr;
    out.overlap = check.hybridization_overlap;
    out.kerr_higher = check.kerr_higher;
    if (std::abs(check.chi - sol.params.chi) > 1e-6 || std::abs(check.kerr - sol.params.kerr) > 1e-6) {
        out.note = "re-verification mismatch";
        return out;
    }
    const bool chi_ok = std::abs(std::abs(out.chi) - chi_target) <= opt.chi_tol * chi_target;
    out.converged = sol.ok && chi_ok && out.overlap >= overlap_min;
    if (!out.converged) out.note = "no feasible point found";
    return out;
}

}  // namespace fluxcav

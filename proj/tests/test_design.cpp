#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace fluxcav;

namespace {

CircuitSpec fluxonium_seed() {
    return circuit_from_json(io::read_json_file(std::string(FLUXCAV_DATA_DIR) + "/fluxonium_design.json").at("circuit"));
}

std::vector<LiteratureEntry> shipped_literature() {
    std::ifstream is(std::string(FLUXCAV_DATA_DIR) + "/transmon_literature.csv");
    return read_literature_csv(is);
}

}  // namespace

TEST(Perturbative, VanishesWithoutCoupling) {
    const auto r = perturbative_chi_kerr({0.3, 0.0, 1.5});
    EXPECT_EQ(r.chi, 0.0);
    EXPECT_EQ(r.kerr, 0.0);
    EXPECT_THROW(perturbative_chi_kerr({0.3, 0.05, 0.0}), InvalidParameter);
    EXPECT_THROW(perturbative_chi_kerr({0.3, 0.05, 0.3}), InvalidParameter);
}

TEST(Perturbative, ChiChangesSignInStraddlingRegime) {
    const double ec = 0.3, g = 0.05;
    EXPECT_GT(perturbative_chi_kerr({ec, g, 0.5 * ec}).chi, 0.0);
    EXPECT_LT(perturbative_chi_kerr({ec, g, 2.0 * ec}).chi, 0.0);
    EXPECT_LT(perturbative_chi_kerr({ec, g, -2.0 * ec}).chi, 0.0);
    EXPECT_LT(perturbative_chi_kerr({ec, g, 0.5 * ec}).kerr, 0.0);
}

TEST(Perturbative, FarDetunedKerrNearBound) {
    const double ec = 0.530, chi = 1e-3;
    for (double delta : {5.0, -5.0, 8.0}) {
        // g such that |chi| = 1 MHz at this detuning
        const double g = std::sqrt(chi * std::abs(delta * (delta - ec)) / (2.0 * ec));
        const auto r = perturbative_chi_kerr({ec, g, delta});
        ASSERT_NEAR(std::abs(r.chi), chi, 1e-15);
        const double ratio = std::abs(r.kerr) / transmon_bound(r.chi, ec);
        EXPECT_GT(ratio, 0.5) << delta;
        EXPECT_LT(ratio, 2.0) << delta;
    }
}

// Full diagonalization of a transmon coupled through its charge, in the dispersive
// regime g/|Delta| = 0.04 and |Delta| >= 5 E_C. The effective coupling is g times the
// g-e charge matrix element; the anharmonicity stands in for E_C.
TEST(Perturbative, AgreesWithFullNumericsInDispersiveRegime) {
    struct Case {
        double e_c, e_j, delta;
    };
    for (const Case c : {Case{0.1, 80.0, 0.6}, Case{0.1, 80.0, -0.6}, Case{0.2, 80.0, 1.0}, Case{0.2, 80.0, -1.0}}) {
        CircuitSpec s;
        s.qubit = TransmonParams{c.e_c, c.e_j, 15};
        s.qubit_levels = 0;
        s.modes = {{"storage", ModeRole::storage, 5.0, 0.0, 5}};
        const auto q = qubit_spectrum(s);
        const double w_q = q.energies(1) - q.energies(0);
        const double g_eff = 0.04 * std::abs(c.delta);
        s.modes[0].bare_freq = w_q - c.delta;
        s.modes[0].coupling_g = g_eff / std::abs(q.charge(0, 1));
        const auto full = effective_params(s);
        const auto pert = perturbative_chi_kerr({c.e_c, g_eff, c.delta});
        EXPECT_NEAR(full.chi / pert.chi, 1.0, 0.2) << c.e_c << " " << c.delta;
        EXPECT_NEAR(full.kerr / pert.kerr, 1.0, 0.2) << c.e_c << " " << c.delta;
    }
}

TEST(Bound, Arithmetic) {
    EXPECT_NEAR(units::to_khz(transmon_bound(units::kMHz)), 0.4717, 1e-4);
    EXPECT_EQ(transmon_bound(0.0), 0.0);
    EXPECT_NEAR(transmon_bound(3e-3) / transmon_bound(1e-3), 9.0, 1e-12);
    EXPECT_DOUBLE_EQ(transmon_bound(-2e-3), transmon_bound(2e-3));
    const auto c = bound_curve({1e-4, 1e-3, 1e-2});
    ASSERT_EQ(c.k_min.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(c.k_min[i], transmon_bound(c.chi_grid[i]));
    EXPECT_THROW(transmon_bound(1e-3, 0.0), InvalidParameter);
}

TEST(Bound, LiteratureAllAboveBound) {
    const auto lit = shipped_literature();
    ASSERT_EQ(lit.size(), 19u);
    for (const auto& c : check_literature(lit)) EXPECT_TRUE(c.pass) << c.entry.citation;
    // Closest approaches to the bound.
    const auto near = check_literature({{0.699, 0.4861, KerrSource::data, "a"}, {1e-3, 0.028, KerrSource::data, "b"}});
    EXPECT_NEAR(near[0].bound_khz, 0.1115, 1e-3);
    EXPECT_TRUE(near[0].pass);
    EXPECT_TRUE(near[1].pass);
}

TEST(Bound, FlagsPointBelowBound) {
    const auto r = check_literature({{0.1, 1.0, KerrSource::simulation, "synthetic"}});
    EXPECT_FALSE(r[0].pass);
    EXPECT_THROW(check_literature({{0.0, 1.0, KerrSource::data, "zero"}}), InvalidParameter);
}

TEST(Bound, MalformedCsv) {
    std::istringstream missing("k_abs_khz,chi_abs_mhz,k_type,citation\n1.0,2.0,data\n");
    EXPECT_THROW(read_literature_csv(missing), InvalidParameter);
    std::istringstream bad_number("k_abs_khz,chi_abs_mhz,k_type,citation\nx,2.0,data,c\n");
    EXPECT_THROW(read_literature_csv(bad_number), InvalidParameter);
    std::istringstream bad_type("k_abs_khz,chi_abs_mhz,k_type,citation\n1.0,2.0,guess,c\n");
    EXPECT_THROW(read_literature_csv(bad_type), InvalidParameter);
}

TEST(FixedChi, PointsReproduceTargetAndDetuning) {
    const auto seed = fluxonium_seed();
    const std::vector<double> grid{-2.5, -2.25};
    const auto pts = sweep_fixed_chi(seed, grid, 1e-3);
    for (const auto& p : pts) {
        ASSERT_TRUE(p.ok) << p.note;
        CircuitSpec s = with_coupling(seed, p.g);
        s.modes[s.storage_index()].bare_freq = p.cavity_freq;
        const auto ep = effective_params(s);
        EXPECT_NEAR(units::to_mhz(std::abs(ep.chi)), 1.0, 1e-3);
        EXPECT_NEAR(ep.omega_qubit - p.cavity_freq, p.delta, 1e-8);
    }
    // Bare placement measures the detuning from the isolated qubit instead.
    FixedChiOptions bare;
    bare.convention = DeltaConvention::bare;
    const auto b = sweep_fixed_chi(seed, {-2.25}, 1e-3, bare);
    EXPECT_NEAR(qubit_ge_frequency(seed) - b[0].cavity_freq, -2.25, 1e-12);
}

TEST(FixedChi, ReproducibleAcrossWorkers) {
    const auto seed = fluxonium_seed();
    const std::vector<double> grid{-2.75, -2.5, -2.25};
    FixedChiOptions one, two;
    two.jobs = 2;
    const auto a = sweep_fixed_chi(seed, grid, 1e-3, one);
    const auto b = sweep_fixed_chi(seed, grid, 1e-3, two);
    std::ostringstream sa, sb;
    write_fixed_chi_csv(sa, a);
    write_fixed_chi_csv(sb, b);
    EXPECT_EQ(sa.str(), sb.str());
}

TEST(FixedChi, FluxoniumKerrChangesSignAtHighOverlap) {
    const auto pts = sweep_fixed_chi(fluxonium_seed(), {-2.5, -2.25}, 1e-3);
    ASSERT_TRUE(pts[0].ok && pts[1].ok);
    EXPECT_LT(pts[0].kerr * pts[1].kerr, 0.0);
    EXPECT_GT(pts[0].overlap, 0.99);
    EXPECT_GT(pts[1].overlap, 0.99);
}

TEST(FixedChi, RejectsBadInput) {
    EXPECT_THROW(sweep_fixed_chi(fluxonium_seed(), {}, 1e-3), InvalidParameter);
    EXPECT_THROW(sweep_fixed_chi(fluxonium_seed(), {-2.0}, 0.0), InvalidParameter);
    // A cavity pushed below zero frequency is reported, not thrown.
    const auto p = sweep_fixed_chi(fluxonium_seed(), {5.0}, 1e-3);
    EXPECT_FALSE(p[0].ok);
}

TEST(ZeroKerr, ShortSearchBeatsTransmonBound) {
    DesignOptions opt;
    opt.max_evals = 120;
    const double chi = 1e-3;
    const auto r = optimize_zero_kerr(fluxonium_seed(), {}, chi, 0.99, opt);
    ASSERT_TRUE(r.converged) << r.note;
    EXPECT_LT(std::abs(r.kerr), transmon_bound(chi));
    EXPECT_GE(r.overlap, 0.99);
    EXPECT_NEAR(std::abs(r.chi) / chi, 1.0, opt.chi_tol);
    // Independent recomputation at the returned parameters.
    const auto check = effective_params(r.params, 5);
    EXPECT_NEAR(check.kerr, r.kerr, 1e-12);
    // Higher-order Kerr terms do not grow with order beyond the numerical floor.
    double prev = std::abs(r.kerr);
    for (const auto& [p, k] : r.kerr_higher) {
        EXPECT_LE(std::abs(k), std::max(prev, 1e-12)) << "p = " << p;
        prev = std::abs(k);
    }
}

TEST(ZeroKerr, RejectsBadTargets) {
    EXPECT_THROW(optimize_zero_kerr(fluxonium_seed(), {}, 0.0, 0.99), InvalidParameter);
    CircuitSpec t;
    t.qubit = TransmonParams{0.3, 20.0, 10};
    t.modes = {{"storage", ModeRole::storage, 5.0, 0.05, 5}};
    EXPECT_THROW(optimize_zero_kerr(t, {}, 1e-3, 0.99), InvalidParameter);
}

#include "support.hpp"

#include <gtest/gtest.h>

using namespace fluxcav;

namespace {

std::vector<double> time_grid(double t_end, double dt) {
    std::vector<double> t;
    for (int k = 0; k * dt <= t_end + 1e-9; ++k) t.push_back(k * dt);
    return t;
}

std::vector<RamseyDataset> synthetic_ramsey(double kerr, double detuning = 10e-3) {
    std::vector<RamseyDataset> out;
    for (double a : {0.5, 1.0, 1.5, 2.0, 2.5}) {
        RamseyConfig cfg;
        cfg.alpha = a;
        cfg.detuning = detuning;
        cfg.kerr = kerr;
        cfg.t_grid = time_grid(500.0, 0.5);
        out.push_back({a, cavity_ramsey_unitary(cfg)});
    }
    return out;
}

}  // namespace

TEST(Spectroscopy, NumberSplitPeaks) {
    const auto vac = number_split_spectrum(0.0, 1e-3, 1e-4);
    ASSERT_EQ(vac.weights.size(), 1u);
    EXPECT_EQ(vac.weights[0], 1.0);
    EXPECT_EQ(vac.peak_centers[0], 0.0);

    const auto m = number_split_spectrum(1.0, 1e-3, 1e-4);
    double sum = 0.0;
    for (std::size_t n = 0; n < m.weights.size(); ++n) {
        EXPECT_NEAR(m.weights[n], std::exp(-1.0) / std::tgamma(n + 1.0), 1e-14);
        if (n > 0) {
            EXPECT_NEAR(m.peak_centers[n] - m.peak_centers[n - 1], 1e-3, 1e-15);
        }
        sum += m.weights[n];
    }
    EXPECT_LE(sum, 1.0 + 1e-14);
    EXPECT_GT(sum, 1.0 - 1e-12);
    // On-peak value is dominated by the peak's own weight.
    EXPECT_NEAR(m(1e-3), m.weights[1], 0.01);
}

TEST(Spectroscopy, PoissonOverlap) {
    EXPECT_EQ(poisson_overlap(0.0), 1.0);
    EXPECT_NEAR(poisson_overlap(1.0), 0.3679, 1e-4);
    InitialState init;
    init.storage = InitialState::Storage::coherent;
    init.alpha = cplx(0.6, 0.9);
    EXPECT_NEAR(make_initial_state(init, 30).vacuum_population(), poisson_overlap(init.alpha), 1e-6);
}

TEST(Spectroscopy, AcStark) {
    EXPECT_EQ(ac_stark_detuning(0.0, 1e-3), 0.0);
    EXPECT_NEAR(units::to_mhz(ac_stark_detuning(2.0, 1.013e-3)), 4.052, 1e-9);
    EXPECT_DOUBLE_EQ(ac_stark_detuning(2.0, 1e-3), 2.0 * ac_stark_detuning(std::sqrt(2.0), 1e-3));
}

TEST(Ramsey, KerrFreeClosedForm) {
    RamseyConfig cfg;
    cfg.alpha = 1.3;
    cfg.detuning = 2e-3;
    cfg.t_grid = time_grid(1000.0, 25.0);
    const auto s = cavity_ramsey_unitary(cfg);
    for (std::size_t k = 0; k < s.t.size(); ++k) {
        const double want = std::exp(-2.0 * 1.69 * (1.0 - std::cos(kTwoPi * 2e-3 * s.t[k])));
        EXPECT_NEAR(s.p[k], want, 1e-9);
    }
}

TEST(Ramsey, KerrRoundTrip) {
    for (double k_khz : {3.6, -13.5, 10.0}) {
        const auto r = extract_kerr_from_ramsey(synthetic_ramsey(k_khz * units::kKHz));
        EXPECT_NEAR(units::to_khz(r.kerr) / k_khz, 1.0, 0.02) << k_khz;
        EXPECT_EQ(r.kerr < 0.0, k_khz < 0.0);
        EXPECT_NEAR(units::to_mhz(r.detuning_offset), 10.0, 0.05);
    }
}

TEST(Ramsey, NullKerrBelowResolution) {
    const auto r = extract_kerr_from_ramsey(synthetic_ramsey(0.0));
    EXPECT_LT(std::abs(units::to_khz(r.kerr)), 0.3);
    EXPECT_FALSE(r.excluded.empty());  // the |alpha|^2 = 0.25 set is below min_nbar
}

TEST(Ramsey, MasterMatchesUnitaryWithoutLoss) {
    RamseyConfig cfg;
    cfg.alpha = 1.0;
    cfg.detuning = 4e-3;
    cfg.kerr = 50e-6;
    cfg.chi = 5e-3;  // strongly selective readout
    cfg.fock_dim = 16;
    cfg.t_grid = time_grid(300.0, 30.0);
    const auto u = cavity_ramsey_unitary(cfg);
    const auto pulse = qubit_pulse(PulseShape::gaussian, 1600.0, 0.0, 0.0, kPi);
    const auto m = cavity_ramsey_master(cfg, pulse);
    ASSERT_EQ(u.p.size(), m.p.size());
    for (std::size_t k = 0; k < u.p.size(); ++k) EXPECT_NEAR(m.p[k], u.p[k], 1e-3) << "t = " << u.t[k];
}

TEST(Ramsey, StrongLossKillsContrast) {
    RamseyConfig cfg;
    cfg.alpha = 1.0;
    cfg.detuning = 4e-3;
    cfg.chi = 5e-3;
    cfg.fock_dim = 8;
    cfg.t_grid = {200.0, 260.0, 320.0};
    LossRates l;
    l.kappa_s = 1e3;  // 1 ns storage lifetime
    cfg.losses = l;
    const auto m = cavity_ramsey_master(cfg, qubit_pulse(PulseShape::gaussian, 1600.0, 0.0, 0.0, kPi));
    const auto [lo, hi] = std::minmax_element(m.p.begin(), m.p.end());
    EXPECT_LT(*hi - *lo, 1e-3);
}

TEST(Ramsey, UnitaryRejectsLosses) {
    RamseyConfig cfg;
    cfg.t_grid = {0.0};
    cfg.losses = LossRates{0.1, 0.0, 0.0, 0.0};
    EXPECT_THROW(cavity_ramsey_unitary(cfg), InvalidParameter);
}

TEST(Rabi, ZeroAmplitudeLeavesInitialization) {
    EffectiveModel model;
    model.chi = 1.013e-3;
    model.fock_dim = 10;
    const auto p = power_rabi_curve(0, 1.0, model, {}, {0.0}, 1600.0, 0.66);
    EXPECT_NEAR(p[0], 0.34, 1e-9);
}

TEST(Rabi, VacuumPeakIsCosine) {
    EffectiveModel model;
    model.chi = 1.013e-3;
    model.fock_dim = 10;
    const std::vector<double> amps{0.25, 0.5, 1.0, 1.5};
    const auto p = power_rabi_curve(0, 1.0, model, {}, amps, 1600.0);
    for (std::size_t k = 0; k < amps.size(); ++k)
        EXPECT_NEAR(p[k], std::exp(-1.0) * std::pow(std::sin(0.5 * kPi * amps[k]), 2), 0.02) << amps[k];
}

TEST(MeasuredWigner, ZeroDriveGivesFlatZero) {
    EffectiveModel model;
    model.chi = 1e-3;
    model.fock_dim = 8;
    WignerMeasurement cfg;
    cfg.max_peak = 4;
    cfg.amplitude_scale.assign(5, 0.0);
    PhaseSpaceGrid g;
    g.resolution = 5;
    MatrixC rho = MatrixC::Zero(8, 8);
    rho(1, 1) = 1.0;
    const auto w = wigner_measured(rho, model, {}, cfg, g);
    EXPECT_EQ(w.grid.values.cwiseAbs().maxCoeff(), 0.0);
}

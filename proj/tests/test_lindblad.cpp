#include "support.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

using namespace fluxcav;

namespace {

EffectiveModel model_of(double chi, double kerr, int fock) {
    EffectiveModel m;
    m.chi = chi;
    m.kerr = kerr;
    m.fock_dim = fock;
    return m;
}

DensityMatrix coherent(cplx alpha, int fock) {
    InitialState init;
    init.storage = InitialState::Storage::coherent;
    init.alpha = alpha;
    return make_initial_state(init, fock);
}

DensityMatrix fock_state(int n, int fock) {
    InitialState init;
    init.storage = InitialState::Storage::fock;
    init.fock_n = n;
    return make_initial_state(init, fock);
}

// Column-major vectorization: vec(A X B) = (B^T kron A) vec(X).
MatrixC dissipator(const MatrixC& l) {
    const Eigen::Index d = l.rows();
    const MatrixC id = MatrixC::Identity(d, d);
    const MatrixC ll = l.adjoint() * l;
    return ops::kron(MatrixC(l.conjugate()), l) - 0.5 * ops::kron(id, ll) - 0.5 * ops::kron(MatrixC(ll.transpose()), id);
}

}  // namespace

TEST(Lindblad, ClosedSystemConservesTraceAndEnergy) {
    const auto model = model_of(1e-3, 4e-6, 8);
    MatrixC a = MatrixC::Random(16, 16);
    MatrixC rho = a * a.adjoint();
    rho /= rho.trace();
    const DensityMatrix r0(rho, 8);
    const VectorR e = model.energies();
    std::vector<double> t;
    for (int k = 0; k <= 10; ++k) t.push_back(1000.0 * k);
    const auto traj = evolve(r0, model, {}, {}, t);
    const double e0 = (rho.diagonal().real().array() * e.array()).sum();
    for (const auto& r : traj) {
        EXPECT_NEAR(r.trace(), 1.0, 1e-9);
        EXPECT_NEAR((r.matrix().diagonal().real().array() * e.array()).sum(), e0, 1e-9);
    }
}

TEST(Lindblad, CoherentStateAmplitudeDecay) {
    const cplx alpha = 2.0;
    const auto model = model_of(0.0, 0.0, 30);
    LossRates l;
    l.kappa_s = 1.0 / 12.0;
    EvolveOptions opt;
    opt.tol = 1e-10;
    opt.atol = 1e-13;
    const auto traj = evolve(coherent(alpha, 30), model, {}, l, {0.0, 2500.0, 5000.0}, opt);
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const double t_us = k * 2.5;
        const cplx want = alpha * std::exp(-0.5 * l.kappa_s * t_us);
        EXPECT_LT(std::abs(traj[k].storage_mean() - want) / std::abs(want), 1e-6);
        EXPECT_NEAR(traj[k].vacuum_population(), std::exp(-std::norm(alpha) * std::exp(-l.kappa_s * t_us)), 1e-4);
    }
}

TEST(Lindblad, DephasingDecaysCoherence) {
    const auto model = model_of(0.0, 0.0, 2);
    MatrixC rho = MatrixC::Zero(4, 4);
    const Eigen::Index g = model.index(0, 0), e = model.index(1, 0);
    rho(g, g) = rho(e, e) = rho(g, e) = rho(e, g) = 0.5;
    LossRates l;
    l.gamma_phi = 1.0 / 16.0;
    EvolveOptions opt;
    opt.tol = 1e-10;
    opt.atol = 1e-13;
    const auto r = evolve_to(DensityMatrix(rho, 2), model, {}, l, 0.0, 10000.0, opt);
    EXPECT_LT(std::abs(std::abs(r.matrix()(e, g)) / (0.5 * std::exp(-l.gamma_phi * 10.0)) - 1.0), 1e-6);
}

TEST(Lindblad, ThermalRelaxation) {
    const auto model = model_of(0.0, 0.0, 2);
    LossRates l;
    l.gamma_down = 0.3;
    l.gamma_up = 0.1;
    EvolveOptions opt;
    opt.tol = 1e-10;
    opt.atol = 1e-13;
    const auto r = evolve_to(fock_state(0, 2), model, {}, l, 0.0, 60000.0, opt);
    EXPECT_NEAR(r.excited_population(), 0.1 / 0.4, 1e-6);
}

// Brute force: constant drives, every loss channel, against expm of the vectorized generator.
TEST(Lindblad, MatchesVectorizedMatrixExponential) {
    const int fock = 5;
    auto model = model_of(2e-3, -3e-4, fock);
    model.storage_detuning = 5e-4;
    const double t_end = 800.0;
    DriveTerm dq;
    dq.envelope = VectorC::Constant(2, cplx(1.5e-3, 0.0));
    dq.dt = t_end;
    dq.phase = 0.4;
    DriveTerm ds = dq;
    ds.target = DriveTarget::storage;
    ds.envelope = VectorC::Constant(2, cplx(0.8e-3, 0.0));
    ds.phase = -1.1;
    LossRates l{1.0 / 12.0, 1.0 / 60.0, 1.0 / 200.0, 1.0 / 30.0};

    const Eigen::Index d = model.dim();
    MatrixC h = model.energies().cast<cplx>().asDiagonal();
    MatrixC sig = MatrixC::Zero(d, d);  // |e><g|
    for (int n = 0; n < fock; ++n) sig(model.index(1, n), model.index(0, n)) = 1.0;
    const MatrixC s = ops::kron(MatrixC(MatrixC::Identity(2, 2)), MatrixC(ops::destroy(fock).cast<cplx>()));
    const cplx cq = 1.5e-3 * std::exp(cplx(0.0, 0.4)), cs = 0.8e-3 * std::exp(cplx(0.0, -1.1));
    h += 0.5 * (cq * sig + std::conj(cq) * sig.adjoint()) + 0.5 * (cs * s + std::conj(cs) * s.adjoint());
    MatrixC z = MatrixC::Zero(d, d);
    for (int n = 0; n < fock; ++n) {
        z(model.index(1, n), model.index(1, n)) = 1.0;
        z(model.index(0, n), model.index(0, n)) = -1.0;
    }
    const MatrixC id = MatrixC::Identity(d, d);
    MatrixC gen = cplx(0.0, -kTwoPi) * (ops::kron(id, h) - ops::kron(MatrixC(h.transpose()), id));
    gen += units::per_us_to_per_ns(l.kappa_s) * dissipator(s);
    gen += units::per_us_to_per_ns(l.gamma_down) * dissipator(sig.adjoint());
    gen += units::per_us_to_per_ns(l.gamma_up) * dissipator(sig);
    gen += units::per_us_to_per_ns(l.gamma_phi) * 0.5 * dissipator(z);

    const DensityMatrix r0 = coherent(0.6, fock);
    const VectorC v0 = Eigen::Map<const VectorC>(r0.matrix().data(), d * d);
    const MatrixC prop = (gen * t_end).exp();
    const VectorC v1 = prop * v0;
    const MatrixC want = Eigen::Map<const MatrixC>(v1.data(), d, d);

    EvolveOptions opt;
    opt.tol = 1e-11;
    opt.atol = 1e-14;
    const auto got = evolve_to(r0, model, {dq, ds}, l, 0.0, t_end, opt);
    EXPECT_LT((got.matrix() - want).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Lindblad, TraceDriftWithinTolerancePerMicrosecond) {
    const auto model = model_of(1e-3, 3.6e-6, 20);
    const auto l = LossRates::from_times(12.0, 123.0, 16.0, 0.66);
    const auto pulse = qubit_pulse(PulseShape::gaussian, 1600.0, 1e-3, 0.0, kPi);
    const auto traj = evolve(coherent(1.0, 20), model, {pulse}, l, {0.0, 800.0, 1600.0, 5000.0});
    for (std::size_t k = 0; k < traj.size(); ++k) {
        EXPECT_LT(std::abs(traj[k].trace() - 1.0), 1e-8 * std::max(1.0, 5.0));
        EXPECT_GT(traj[k].min_eigenvalue(), -1e-8);
    }
}

TEST(Pulses, SquarePiPulseInverts) {
    const auto model = model_of(0.0, 0.0, 2);
    const auto p = qubit_pulse(PulseShape::square, 100.0, 0.0, 0.0, kPi);
    EvolveOptions opt;
    opt.tol = 1e-10;
    opt.atol = 1e-13;
    EXPECT_NEAR(evolve_to(fock_state(0, 2), model, {p}, {}, 0.0, 100.0, opt).excited_population(), 1.0, 1e-6);
}

TEST(Pulses, ShortPulseIsUnselective) {
    const auto model = model_of(1.013e-3, 3.6e-6, 15);
    const auto p = qubit_pulse(PulseShape::gaussian, 40.0, 0.0, 0.0, kPi);
    EXPECT_GT(evolve_to(coherent(1.0, 15), model, {p}, {}, 0.0, 40.0).excited_population(), 0.95);
}

TEST(Pulses, LongPulseIsSelective) {
    const auto model = model_of(1.013e-3, 3.6e-6, 8);
    const int target = 2;
    const auto p = qubit_pulse(PulseShape::gaussian, 1600.0, target * model.chi, 0.0, kPi);
    for (int n = 0; n < 5; ++n) {
        const double pe = evolve_to(fock_state(n, 8), model, {p}, {}, 0.0, 1600.0).excited_population();
        if (n == target) {
            EXPECT_GT(pe, 0.95);
        } else if (std::abs(n - target) == 1) {
            EXPECT_LT(pe, 0.05) << "n = " << n;
        }
    }
}

TEST(Pulses, AreaNormalization) {
    const auto p = qubit_pulse(PulseShape::gaussian, 400.0, 0.0, 0.0, kPi);
    EXPECT_NEAR(kTwoPi * envelope_area(p.envelope.real(), p.dt), kPi, 1e-12);
    EXPECT_EQ(p.amplitude(-1.0), cplx(0.0));
    EXPECT_EQ(p.amplitude(401.0), cplx(0.0));
}

TEST(Displacement, Properties) {
    const int n = 24;
    EXPECT_LT((displacement(0.0, n) - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-14);
    const cplx a(0.7, -0.4);
    EXPECT_LT((displacement(a, n) * displacement(-a, n) - MatrixC::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
    const DensityMatrix r = coherent(1.0, n);
    EXPECT_NEAR(r.photon_number(), 1.0, 1e-8);
    const VectorR p = r.fock_populations();
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(p(k), std::exp(-1.0) / std::tgamma(k + 1.0), 1e-6);
    EXPECT_THROW(displace(r, 3.0), TruncationError);
}

TEST(Losses, FromTimes) {
    const auto l = LossRates::from_times(12.0, 123.0, 16.0, 0.66);
    EXPECT_NEAR(l.kappa_s, 1.0 / 12.0, 1e-15);
    EXPECT_NEAR(l.gamma_down + l.gamma_up, 1.0 / 123.0, 1e-15);
    EXPECT_NEAR(l.gamma_up / (l.gamma_down + l.gamma_up), 0.34, 1e-12);
    EXPECT_NEAR(l.gamma_phi, 1.0 / 16.0 - 0.5 / 123.0, 1e-15);
    const auto none = LossRates::from_times(INFINITY, INFINITY, INFINITY, 1.0);
    EXPECT_TRUE(none.none());
    EXPECT_THROW(LossRates::from_times(1.0, 1.0, 1.0, 1.5), InvalidParameter);
}

TEST(InitialStates, ThermalQubitMixture) {
    InitialState init;
    init.qubit_ground_population = 0.9;
    const auto r = make_initial_state(init, 4);
    EXPECT_NEAR(r.excited_population(), 0.1, 1e-15);
    EXPECT_NEAR(r.purity(), 0.82, 1e-12);
}

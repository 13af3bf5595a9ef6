#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

using namespace fluxcav;
using fluxcav::fixtures::shipped_device;

namespace {

VectorR qubit_levels(const FluxoniumParams& p, int dim, int count) {
    const auto q = build_fluxonium_operators(p, dim);
    Eigen::SelfAdjointEigenSolver<MatrixR> es(q.hamiltonian.matrix().real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(count);
}

VectorR transmon_levels(const TransmonParams& p, int count) {
    const auto q = build_transmon_operators(p);
    Eigen::SelfAdjointEigenSolver<MatrixR> es(q.hamiltonian.matrix().real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().head(count);
}

const FluxoniumParams kDeviceA{1.142, 0.559, 3.645, 0.5, 0};

}  // namespace

TEST(Fluxonium, HarmonicLimitWithoutJunction) {
    for (const auto& [ec, el] : std::vector<std::pair<double, double>>{{1.0, 0.5}, {0.3, 2.0}, {2.5, 0.1}}) {
        const VectorR e = qubit_levels({ec, el, 0.0, 0.37, 0}, 60, 12);
        const double w = std::sqrt(8.0 * ec * el);
        for (int k = 1; k < e.size(); ++k) EXPECT_NEAR((e(k) - e(k - 1)) / w, 1.0, 1e-10) << "level " << k;
    }
}

TEST(Fluxonium, SpectrumEvenInExternalFlux) {
    FluxoniumParams p = kDeviceA;
    for (double phi : {0.5, 0.31, 0.07}) {
        p.phi_ext = phi;
        const VectorR a = qubit_levels(p, 60, 10);
        p.phi_ext = -phi;
        const VectorR b = qubit_levels(p, 60, 10);
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10) << phi;
    }
}

TEST(Fluxonium, SpectrumPeriodicInFluxQuantum) {
    FluxoniumParams p = kDeviceA;
    p.phi_ext = 0.43;
    const VectorR a = qubit_levels(p, 60, 6);
    p.phi_ext = 1.43;
    // The harmonic basis is not periodic; the low levels converge to the periodic answer.
    EXPECT_LT((a - qubit_levels(p, 60, 6)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Fluxonium, TruncationConverged) {
    const VectorR a = qubit_levels(kDeviceA, 60, 6);
    const VectorR b = qubit_levels(kDeviceA, 120, 6);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Fluxonium, CanonicalCommutator) {
    const int dim = 40;
    const auto q = build_fluxonium_operators(kDeviceA, dim);
    const MatrixC c = q.phase.matrix() * q.charge.matrix() - q.charge.matrix() * q.phase.matrix();
    const MatrixC want = cplx(0.0, 1.0) * MatrixC::Identity(dim - 2, dim - 2);
    EXPECT_LT((c.topLeftCorner(dim - 2, dim - 2) - want).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Fluxonium, RejectsBadParameters) {
    EXPECT_THROW(build_fluxonium_operators({-1.0, 0.5, 3.0, 0.5, 0}, 40), InvalidParameter);
    EXPECT_THROW(build_fluxonium_operators({1.0, 0.5, 3.0, 0.5, 0}, 3), TruncationError);
}

TEST(Transmon, AsymptoticFrequency) {
    const TransmonParams p{0.3, 15.0, 15};
    const VectorR e = transmon_levels(p, 2);
    const double approx = std::sqrt(8.0 * p.e_c * p.e_j) - p.e_c;
    EXPECT_NEAR((e(1) - e(0)) / approx, 1.0, 0.02);
}

TEST(Transmon, CutoffConverged) {
    const VectorR a = transmon_levels({0.530, 26.5, 15}, 4);
    const VectorR b = transmon_levels({0.530, 26.5, 25}, 4);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Transmon, BuildsWithResonator) {
    const auto h = build_transmon_hamiltonian({0.530, 26.5, 15}, {"storage", ModeRole::storage, 9.5, 0.05, 5});
    EXPECT_EQ(h.dim(), 31 * 5);
}

TEST(Coupled, DecoupledIsTensorSum) {
    auto spec = fixtures::single_mode_fluxonium(1.142, 0.559, 3.645, 0.5, 5.3575, 0.0, 5);
    spec.modes.push_back({"readout", ModeRole::readout, 6.4615, 0.0, 3});
    spec.qubit_levels = 6;
    const auto q = qubit_spectrum(spec);
    std::vector<double> sums;
    for (int k = 0; k < 6; ++k)
        for (int n = 0; n < 5; ++n)
            for (int m = 0; m < 3; ++m) sums.push_back(q.energies(k) + n * 5.3575 + m * 6.4615);
    std::sort(sums.begin(), sums.end());
    Eigen::SelfAdjointEigenSolver<MatrixC> es(build_coupled_hamiltonian(spec).matrix(), Eigen::EigenvaluesOnly);
    ASSERT_EQ(static_cast<std::size_t>(es.eigenvalues().size()), sums.size());
    for (std::size_t k = 0; k < sums.size(); ++k) EXPECT_NEAR(es.eigenvalues()(k), sums[k], 1e-10);
}

TEST(Coupled, DeviceABuildsAtReducedTruncation) {
    auto dev = shipped_device("device_a");
    dev.circuit.qubit_dim = 40;
    dev.circuit.modes[0].fock_dim = 10;
    dev.circuit.modes[1].fock_dim = 5;
    const auto h = build_coupled_hamiltonian(dev.circuit);
    EXPECT_EQ(h.dim(), dev.circuit.retained_qubit_levels() * 50);
}

TEST(Coupled, ProductDimensionCap) {
    auto dev = shipped_device("device_a");
    dev.circuit.max_product_dim = 100;
    EXPECT_THROW(build_coupled_hamiltonian(dev.circuit), ResourceError);
}

// Two-level stub with charge sigma_y: the rotating-wave coupling is g (sigma+ a + sigma- a†).
TEST(Coupled, JaynesCummingsOracle) {
    const double w = 5.0, g = 0.02;
    QubitSpectrum stub;
    stub.energies = VectorR(2);
    stub.energies << 0.0, w;
    stub.charge = MatrixC::Zero(2, 2);
    stub.charge(0, 1) = cplx(0.0, -1.0);
    stub.charge(1, 0) = cplx(0.0, 1.0);
    stub.coupling_sign = -1.0;
    const int fock = 8;
    const auto h = build_coupled_hamiltonian(stub, {{"storage", ModeRole::storage, w, g, fock}}, CouplingForm::rotating_wave);
    Eigen::SelfAdjointEigenSolver<MatrixC> es(h.matrix(), Eigen::EigenvaluesOnly);
    std::vector<double> want{0.0};
    for (int n = 1; n < fock; ++n) {
        want.push_back(n * w - g * std::sqrt(n));
        want.push_back(n * w + g * std::sqrt(n));
    }
    want.push_back(fock * w);  // |e, fock-1> has no partner inside the truncation
    std::sort(want.begin(), want.end());
    ASSERT_EQ(static_cast<std::size_t>(es.eigenvalues().size()), want.size());
    for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(es.eigenvalues()(k), want[k], 1e-8);
}

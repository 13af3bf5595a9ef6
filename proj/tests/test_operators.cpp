#include "support.hpp"

#include <gtest/gtest.h>

#include <array>

using namespace fluxcav;

TEST(Operators, LadderCommutatorIsIdentityBelowTruncation) {
    const int n = 12;
    const MatrixR a = ops::destroy(n);
    const MatrixR c = a * a.transpose() - a.transpose() * a;
    // The last diagonal entry is the truncation artefact 1 - n.
    EXPECT_LT((c.topLeftCorner(n - 1, n - 1) - MatrixR::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_NEAR(c(n - 1, n - 1), 1.0 - n, 1e-12);
    EXPECT_LT((a.transpose() * a - ops::number(n)).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Operators, KronAndEmbedAgree) {
    const MatrixR a = ops::destroy(3);
    const MatrixR b = ops::number(4);
    const std::array<Eigen::Index, 3> dims{2, 3, 4};
    const MatrixR via_embed = ops::embed(a, 1, dims) * ops::embed(b, 2, dims);
    const MatrixR via_pair = ops::embed_pair(a, 1, b, 2, dims);
    const MatrixR direct = ops::kron(MatrixR(MatrixR::Identity(2, 2)), ops::kron(a, b));
    EXPECT_LT((via_embed - direct).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((via_pair - direct).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(ops::embed(a, 0, dims), InvalidParameter);
}

TEST(Operators, ExpiHermitianIsUnitary) {
    MatrixC h = MatrixC::Random(6, 6);
    h = (h + h.adjoint()).eval();
    const MatrixC u = ops::expi_hermitian(h, 0.7);
    EXPECT_LT((u * u.adjoint() - MatrixC::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
    // exp(i s h) exp(-i s h) = 1
    EXPECT_LT((u * ops::expi_hermitian(h, -0.7) - MatrixC::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Operators, HermitianOperatorRejectsNonHermitian) {
    MatrixC m = MatrixC::Zero(2, 2);
    m(0, 1) = 1.0;
    EXPECT_THROW(HermitianOperator{m}, InvalidParameter);
    EXPECT_THROW(HermitianOperator{MatrixC::Zero(2, 3)}, InvalidParameter);
}

TEST(Operators, ProductBasisRoundTrip) {
    const ProductBasis b({3, 4, 5});
    EXPECT_EQ(b.size(), 60);
    for (Eigen::Index k = 0; k < b.size(); ++k) {
        const auto d = b.digits(k);
        const std::array<int, 2> ph{d[1], d[2]};
        EXPECT_EQ(b.index(d[0], ph), k);
    }
    const std::array<int, 2> out_of_range{4, 0};
    EXPECT_EQ(b.index(0, out_of_range), -1);
}

// Reordering the harmonic modes permutes the basis but leaves the spectrum alone.
TEST(Operators, ModeOrderDoesNotChangeSpectrum) {
    auto spec = fixtures::single_mode_fluxonium(1.0, 0.8, 3.0, 0.5, 4.0, 0.05, 4);
    spec.modes.push_back({"readout", ModeRole::readout, 6.5, 0.08, 3});
    spec.qubit_levels = 6;
    CircuitSpec swapped = spec;
    std::swap(swapped.modes[0], swapped.modes[1]);
    Eigen::SelfAdjointEigenSolver<MatrixC> a(build_coupled_hamiltonian(spec).matrix(), Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<MatrixC> b(build_coupled_hamiltonian(swapped).matrix(), Eigen::EigenvaluesOnly);
    EXPECT_LT((a.eigenvalues() - b.eigenvalues()).cwiseAbs().maxCoeff(), 1e-10);
}

// operators.hpp: dense operator algebra on truncated Fock and product spaces.

#pragma once

#include "fluxcav/core.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace fluxcav {

// Square complex matrix checked to be Hermitian on construction.
class HermitianOperator {
public:
    HermitianOperator() = default;

    explicit HermitianOperator(MatrixC m, double rel_tol = 1e-12) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw InvalidParameter("HermitianOperator: matrix is not square");
        const double scale = m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0;
        const double dev = m_.size() ? (m_ - m_.adjoint()).cwiseAbs().maxCoeff() : 0.0;
        if (dev > rel_tol * std::max(scale, 1e-300) && dev > 0.0) {
            throw InvalidParameter("HermitianOperator: deviation from Hermiticity " + std::to_string(dev));
        }
        // Remove rounding asymmetry so downstream eigensolvers see an exact Hermitian input.
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
    }

    static HermitianOperator from_real(const MatrixR& m) { return HermitianOperator(m.cast<cplx>()); }

    [[nodiscard]] Eigen::Index dim() const { return m_.rows(); }
    [[nodiscard]] const MatrixC& matrix() const { return m_; }

    // True when every entry has zero imaginary part; lets callers use a real eigensolver.
    [[nodiscard]] bool is_real() const { return m_.imag().cwiseAbs().maxCoeff() == 0.0; }

    [[nodiscard]] double max_abs() const { return m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0; }

private:
    MatrixC m_;
};

namespace ops {

// a |n> = sqrt(n) |n-1>
inline MatrixR destroy(Eigen::Index n) {
    require(n > 0, "destroy: dimension must be positive");
    MatrixR m = MatrixR::Zero(n, n);
    for (Eigen::Index k = 1; k < n; ++k) m(k - 1, k) = std::sqrt(static_cast<double>(k));
    return m;
}

inline MatrixR create(Eigen::Index n) { return destroy(n).transpose(); }

inline MatrixR number(Eigen::Index n) {
    require(n > 0, "number: dimension must be positive");
    MatrixR m = MatrixR::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) m(k, k) = static_cast<double>(k);
    return m;
}

template <class A, class B>
auto kron(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
    using Scalar = typename A::Scalar;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = Eigen::kroneckerProduct(a.derived(), b.derived());
    return out;
}

// Place `op` on factor `slot` of a tensor product with the given factor dimensions.
template <class Derived>
auto embed(const Eigen::MatrixBase<Derived>& op, std::size_t slot, std::span<const Eigen::Index> dims) {
    using Scalar = typename Derived::Scalar;
    using M = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require(slot < dims.size(), "embed: slot out of range");
    require(op.rows() == dims[slot] && op.cols() == dims[slot], "embed: operator does not match slot dimension");
    M out = M::Identity(1, 1);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        M factor = (k == slot) ? M(op.derived()) : M::Identity(dims[k], dims[k]);
        out = kron(out, factor);
    }
    return out;
}

// Tensor product of `a` on slot_a and `b` on slot_b (identity elsewhere), built
// directly as a Kronecker chain rather than as a product of two embeddings.
template <class DA, class DB>
auto embed_pair(const Eigen::MatrixBase<DA>& a, std::size_t slot_a, const Eigen::MatrixBase<DB>& b, std::size_t slot_b,
                std::span<const Eigen::Index> dims) {
    using M = Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    require(slot_a != slot_b && slot_a < dims.size() && slot_b < dims.size(), "embed_pair: bad slots");
    require(a.rows() == dims[slot_a] && b.rows() == dims[slot_b], "embed_pair: operator does not match slot");
    M out = M::Identity(1, 1);
    for (std::size_t k = 0; k < dims.size(); ++k) {
        M factor = (k == slot_a) ? M(a.derived()) : (k == slot_b) ? M(b.derived()) : M::Identity(dims[k], dims[k]);
        out = kron(out, factor);
    }
    return out;
}

// exp(i * h) for Hermitian h via its eigendecomposition.
inline MatrixC expi_hermitian(const MatrixC& h, double scale = 1.0) {
    Eigen::SelfAdjointEigenSolver<MatrixC> es(h);
    if (es.info() != Eigen::Success) throw Error("expi_hermitian: eigendecomposition failed");
    VectorC phases = (cplx(0.0, scale) * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace ops

// Index bookkeeping for a qubit ⊗ mode_1 ⊗ ... ⊗ mode_k product basis.
// The qubit index is the slowest-varying digit.
class ProductBasis {
public:
    ProductBasis() = default;
    explicit ProductBasis(std::vector<Eigen::Index> dims) : dims_(std::move(dims)) {
        require(!dims_.empty(), "ProductBasis: at least one factor required");
        for (auto d : dims_) require(d > 0, "ProductBasis: factor dimensions must be positive");
        strides_.assign(dims_.size(), 1);
        for (std::size_t k = dims_.size() - 1; k > 0; --k) strides_[k - 1] = strides_[k] * dims_[k];
    }

    [[nodiscard]] Eigen::Index size() const {
        return std::accumulate(dims_.begin(), dims_.end(), Eigen::Index{1}, std::multiplies<>());
    }
    [[nodiscard]] std::span<const Eigen::Index> dims() const { return dims_; }
    [[nodiscard]] std::size_t num_modes() const { return dims_.size() - 1; }

    [[nodiscard]] Eigen::Index index(int qubit, std::span<const int> photons) const {
        require(photons.size() == num_modes(), "ProductBasis: photon tuple has wrong length");
        if (qubit < 0 || qubit >= dims_[0]) return -1;
        Eigen::Index idx = qubit * strides_[0];
        for (std::size_t k = 0; k < photons.size(); ++k) {
            if (photons[k] < 0 || photons[k] >= dims_[k + 1]) return -1;
            idx += photons[k] * strides_[k + 1];
        }
        return idx;
    }

    // Digits of a flat index: [qubit, n_1, ..., n_k].
    [[nodiscard]] std::vector<int> digits(Eigen::Index flat) const {
        std::vector<int> out(dims_.size());
        for (std::size_t k = 0; k < dims_.size(); ++k) {
            out[k] = static_cast<int>(flat / strides_[k]);
            flat %= strides_[k];
        }
        return out;
    }

private:
    std::vector<Eigen::Index> dims_;
    std::vector<Eigen::Index> strides_;
};

}  // namespace fluxcav

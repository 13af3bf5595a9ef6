// phase_space.hpp: Husimi Q and Wigner functions of a truncated storage state.

#pragma once

#include "fluxcav/core.hpp"
#include "fluxcav/lindblad.hpp"

#include <cmath>
#include <ostream>
#include <vector>

namespace fluxcav {

// Square-lattice grid over the complex plane. values(i, j) sits at
// alpha = re(j) + i * im(i).
struct PhaseSpaceGrid {
    double re_min{-3.0}, re_max{3.0};
    double im_min{-3.0}, im_max{3.0};
    int resolution{61};
    MatrixR values;

    void validate() const {
        require(resolution >= 2, "PhaseSpaceGrid: resolution must be >= 2");
        require(re_max > re_min && im_max > im_min, "PhaseSpaceGrid: empty range");
    }
    [[nodiscard]] double re(int j) const { return re_min + (re_max - re_min) * j / (resolution - 1); }
    [[nodiscard]] double im(int i) const { return im_min + (im_max - im_min) * i / (resolution - 1); }
    [[nodiscard]] cplx at(int i, int j) const { return {re(j), im(i)}; }
    [[nodiscard]] double cell_area() const {
        return (re_max - re_min) / (resolution - 1) * (im_max - im_min) / (resolution - 1);
    }
    // Trapezoid quadrature of `values` over the window.
    [[nodiscard]] double integral() const {
        double acc = 0.0;
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < resolution; ++j) {
                const double wi = (i == 0 || i == resolution - 1) ? 0.5 : 1.0;
                const double wj = (j == 0 || j == resolution - 1) ? 0.5 : 1.0;
                acc += wi * wj * values(i, j);
            }
        return acc * cell_area();
    }
};

namespace detail {

// <n|D(gamma)|m> for all n, m < dim, from the associated Laguerre closed form.
inline MatrixC displacement_elements(cplx gamma, int dim) {
    MatrixC d(dim, dim);
    const double x = std::norm(gamma);
    const double r = std::abs(gamma);
    const double ang = std::arg(gamma);
    for (int n = 0; n < dim; ++n) {
        for (int m = 0; m < dim; ++m) {
            const int lo = std::min(n, m), k = std::abs(n - m);
            // sqrt(lo!/hi!) |gamma|^k e^{-x/2}, in logs for large indices
            const double logmag = 0.5 * (std::lgamma(lo + 1.0) - std::lgamma(lo + k + 1.0)) +
                                  (k > 0 ? k * std::log(r) : 0.0) - 0.5 * x;
            const double mag = (k > 0 && r == 0.0) ? 0.0 : std::exp(logmag) * std::assoc_laguerre(lo, k, x);
            // n >= m: gamma^k ; n < m: (-gamma*)^k
            const double phase = n >= m ? k * ang : k * (kPi - ang);
            d(n, m) = std::polar(mag, phase);
        }
    }
    return d;
}

}  // namespace detail

// W(alpha) = (2/pi) Tr[D(alpha)† rho D(alpha) P] = (2/pi) sum_{mn} rho_mn (-1)^m <n|D(2 alpha)|m>.
inline PhaseSpaceGrid wigner_exact(const MatrixC& rho_storage, PhaseSpaceGrid grid) {
    grid.validate();
    const int dim = static_cast<int>(rho_storage.rows());
    VectorR parity(dim);
    for (int m = 0; m < dim; ++m) parity(m) = (m % 2 == 0) ? 1.0 : -1.0;
    grid.values.resize(grid.resolution, grid.resolution);
    for (int i = 0; i < grid.resolution; ++i) {
        for (int j = 0; j < grid.resolution; ++j) {
            const MatrixC d = detail::displacement_elements(2.0 * grid.at(i, j), dim);
            cplx acc = 0.0;
            for (int m = 0; m < dim; ++m)
                for (int n = 0; n < dim; ++n) acc += rho_storage(m, n) * parity(m) * d(n, m);
            grid.values(i, j) = 2.0 / kPi * acc.real();
        }
    }
    return grid;
}

inline PhaseSpaceGrid wigner_exact(const DensityMatrix& rho, PhaseSpaceGrid grid) {
    return wigner_exact(rho.storage_state(), std::move(grid));
}

// Q(alpha) = (1/pi) <alpha|rho|alpha> with untruncated coherent-state amplitudes.
inline PhaseSpaceGrid q_function(const MatrixC& rho_storage, PhaseSpaceGrid grid) {
    grid.validate();
    const int dim = static_cast<int>(rho_storage.rows());
    grid.values.resize(grid.resolution, grid.resolution);
    VectorC c(dim);
    for (int i = 0; i < grid.resolution; ++i) {
        for (int j = 0; j < grid.resolution; ++j) {
            const cplx a = grid.at(i, j);
            const double x = std::norm(a);
            for (int n = 0; n < dim; ++n) {
                const double logmag = -0.5 * x + (n > 0 ? n * std::log(std::abs(a)) : 0.0) - 0.5 * std::lgamma(n + 1.0);
                c(n) = (n > 0 && a == 0.0) ? cplx(0.0) : std::polar(std::exp(logmag), n * std::arg(a));
            }
            grid.values(i, j) = (c.adjoint() * rho_storage * c)(0, 0).real() / kPi;
        }
    }
    return grid;
}

inline PhaseSpaceGrid q_function(const DensityMatrix& rho, PhaseSpaceGrid grid) {
    return q_function(rho.storage_state(), std::move(grid));
}

// CSV matrix: first row holds Re(alpha), first column Im(alpha).
inline void write_grid_csv(std::ostream& os, const PhaseSpaceGrid& g) {
    os.precision(12);
    os << "im\\re";
    for (int j = 0; j < g.resolution; ++j) os << ',' << g.re(j);
    os << '\n';
    for (int i = 0; i < g.resolution; ++i) {
        os << g.im(i);
        for (int j = 0; j < g.resolution; ++j) os << ',' << g.values(i, j);
        os << '\n';
    }
}

}  // namespace fluxcav

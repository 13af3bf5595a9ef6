// optimize.hpp: small derivative-free minimizers and root finders.

#pragma once

#include "fluxcav/core.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

#include <algorithm>
#include <functional>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

namespace fluxcav {

struct NelderMeadOptions {
    int max_evals{2000};
    double f_tol{1e-12};  // stop when the simplex spread in f falls below this
    double x_tol{1e-10};  // ... and in x below this (max abs coordinate spread)
    double initial_step{0.1};
};

struct MinimizeResult {
    VectorR x;
    double f{0.0};
    int evals{0};
    bool converged{false};
};

// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
// `steps` gives the per-coordinate size of the initial simplex (uniform
// opt.initial_step when empty).
template <class F>
MinimizeResult nelder_mead(F&& f, const VectorR& x0, const NelderMeadOptions& opt = {}, const VectorR& steps = {}) {
    const Eigen::Index n = x0.size();
    require(n > 0, "nelder_mead: empty parameter vector");
    std::vector<VectorR> pts(static_cast<std::size_t>(n + 1), x0);
    for (Eigen::Index k = 0; k < n; ++k) pts[k + 1](k) += steps.size() == n ? steps(k) : opt.initial_step;
    std::vector<double> fv(pts.size());
    int evals = 0;
    auto eval = [&](const VectorR& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    for (std::size_t k = 0; k < pts.size(); ++k) fv[k] = eval(pts[k]);

    std::vector<std::size_t> order(pts.size());
    bool converged = false;
    while (evals < opt.max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];
        double xspread = 0.0;
        for (const auto& p : pts) xspread = std::max(xspread, (p - pts[best]).cwiseAbs().maxCoeff());
        if (std::abs(fv[worst] - fv[best]) <= opt.f_tol && xspread <= opt.x_tol) {
            converged = true;
            break;
        }
        VectorR centroid = VectorR::Zero(n);
        for (std::size_t k : order)
            if (k != worst) centroid += pts[k];
        centroid /= static_cast<double>(n);

        const VectorR xr = centroid + (centroid - pts[worst]);
        const double fr = eval(xr);
        if (fr < fv[best]) {
            const VectorR xe = centroid + 2.0 * (centroid - pts[worst]);
            const double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const VectorR xc = outside ? VectorR(centroid + 0.5 * (xr - centroid))
                                       : VectorR(centroid + 0.5 * (pts[worst] - centroid));
            const double fc = eval(xc);
            if (fc < std::min(fr, fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t k = 0; k < pts.size(); ++k) {
                    if (k == best) continue;
                    pts[k] = pts[best] + 0.5 * (pts[k] - pts[best]);
                    fv[k] = eval(pts[k]);
                }
            }
        }
    }
    const auto it = std::min_element(fv.begin(), fv.end());
    MinimizeResult r;
    r.x = pts[static_cast<std::size_t>(it - fv.begin())];
    r.f = *it;
    r.evals = evals;
    r.converged = converged;
    return r;
}

struct LeastSquaresOptions {
    int max_evals{5000};
    double diff_step{1e-7};  // forward-difference step for the Jacobian
};

namespace detail {

struct ResidualFunctor : Eigen::DenseFunctor<double> {
    std::function<void(const VectorR&, VectorR&)> fn;
    int* evals{nullptr};
    ResidualFunctor(int n, int m) : Eigen::DenseFunctor<double>(n, m) {}
    int operator()(const InputType& x, ValueType& r) const {
        ++*evals;
        VectorR out(values());
        fn(x, out);
        r = out;
        return 0;
    }
};

}  // namespace detail

// Levenberg-Marquardt on sum(r_i(x)^2) with a finite-difference Jacobian. Needs at
// least as many residuals as parameters.
template <class F>
MinimizeResult least_squares(F&& residuals, const VectorR& x0, int num_residuals, const LeastSquaresOptions& opt = {}) {
    const auto n = static_cast<int>(x0.size());
    require(n > 0 && num_residuals >= n, "least_squares: need at least as many residuals as parameters");
    int evals = 0;
    detail::ResidualFunctor f(n, num_residuals);
    f.fn = [&](const VectorR& x, VectorR& r) { residuals(x, r); };
    f.evals = &evals;
    Eigen::NumericalDiff<detail::ResidualFunctor> nd(f, opt.diff_step);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<detail::ResidualFunctor>> lm(nd);
    lm.setMaxfev(opt.max_evals);
    VectorR x = x0;
    const auto status = lm.minimize(x);
    MinimizeResult r;
    VectorR res(num_residuals);
    residuals(x, res);
    r.x = x;
    r.f = res.squaredNorm();
    r.evals = evals;
    r.converged = status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                  status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
    return r;
}

// Golden-section search for a minimum of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol = 1e-10, int max_iter = 200) {
    require(b > a, "golden_section: empty bracket");
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - r * (b - a), d = a + r * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > tol * (std::abs(c) + std::abs(d) + 1e-300); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    return fc < fd ? std::pair{c, fc} : std::pair{d, fd};
}

// Bisection for f(x) = 0 on a sign-changing bracket.
template <class F>
double bisect(F&& f, double a, double b, double x_tol, int max_iter = 200) {
    double fa = f(a);
    const double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) throw OptimizationFailure("bisect: root not bracketed");
    for (int it = 0; it < max_iter && std::abs(b - a) > x_tol; ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m);
        if (fm == 0.0) return m;
        if (fa * fm < 0.0) {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace fluxcav

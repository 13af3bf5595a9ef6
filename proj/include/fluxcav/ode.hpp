// ode.hpp: adaptive Dormand-Prince 5(4) integrator for Eigen-valued states.

#pragma once

#include "fluxcav/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fluxcav {

struct OdeOptions {
    double rtol{1e-8};
    double atol{1e-10};
    double h_initial{0.0};  // 0 picks a step from the first derivative
    double h_max{std::numeric_limits<double>::infinity()};
    double h_min_rel{1e-13};  // underflow when h < h_min_rel * max(|t|, 1)
    long max_steps{50'000'000};
};

struct OdeStats {
    long accepted{0};
    long rejected{0};
    long rhs_calls{0};
};

namespace detail {

template <class State>
double scaled_error(const State& err, const State& y0, const State& y1, double atol, double rtol) {
    const auto scale = (atol + rtol * y0.array().abs().max(y1.array().abs())).eval();
    return (err.array().abs() / scale).maxCoeff();
}

}  // namespace detail

// Integrate dy/dt = rhs(t, y) from t_out.front() and return y at every entry of
// t_out (non-decreasing). Steps are clamped so each output time is hit exactly.
// `State` is any fixed-layout Eigen matrix or vector type.
template <class State, class Rhs>
std::vector<State> integrate_dopri5(Rhs&& rhs, const State& y0, const std::vector<double>& t_out,
                                    const OdeOptions& opt = {}, OdeStats* stats = nullptr) {
    require(!t_out.empty(), "integrate_dopri5: output grid is empty");
    require(std::is_sorted(t_out.begin(), t_out.end()), "integrate_dopri5: output grid must be non-decreasing");
    require(opt.rtol > 0.0 && opt.atol >= 0.0, "integrate_dopri5: tolerances must be positive");

    // Dormand-Prince coefficients.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeStats local;
    OdeStats& st = stats ? *stats : local;

    std::vector<State> out;
    out.reserve(t_out.size());
    double t = t_out.front();
    State y = y0;
    State k1 = rhs(t, y);
    ++st.rhs_calls;

    const double span = t_out.back() - t_out.front();
    double h = opt.h_initial;
    if (h <= 0.0) {
        const double d0 = y.norm();
        const double d1 = k1.norm();
        h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-6;
        h = std::min(h, span > 0.0 ? span : 1.0);
        h = std::max(h, 1e-12);
    }
    h = std::min(h, opt.h_max);

    double err_prev = 1e-4;
    long steps = 0;
    for (double target : t_out) {
        while (t < target) {
            if (++steps > opt.max_steps) throw IntegrationError("integrate_dopri5: step budget exhausted at t = " +
                                                                std::to_string(t));
            const double h_min = opt.h_min_rel * std::max(std::abs(t), 1.0);
            bool clamped = false;
            double hs = h;
            if (t + hs >= target) {
                hs = target - t;
                clamped = true;
            }
            if (hs < h_min && !clamped) {
                throw IntegrationError("integrate_dopri5: step size underflow (h = " + std::to_string(hs) +
                                       ") at t = " + std::to_string(t));
            }
            const State k2 = rhs(t + c2 * hs, (y + hs * (a21 * k1)).eval());
            const State k3 = rhs(t + c3 * hs, (y + hs * (a31 * k1 + a32 * k2)).eval());
            const State k4 = rhs(t + c4 * hs, (y + hs * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
            const State k5 = rhs(t + c5 * hs, (y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
            const State k6 =
                rhs(t + hs, (y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
            const State y1 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            const State k7 = rhs(t + hs, y1);
            st.rhs_calls += 6;
            const State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
            const double en = detail::scaled_error(err, y, y1, opt.atol, opt.rtol);
            if (!std::isfinite(en)) {
                throw IntegrationError("integrate_dopri5: non-finite state at t = " + std::to_string(t));
            }

            if (en <= 1.0) {
                // PI step-size controller (Hairer & Wanner, II.4).
                const double fac = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.7 / 5.0) * std::pow(err_prev, 0.4 / 5.0);
                t = clamped ? target : t + hs;
                y = y1;
                k1 = k7;
                ++st.accepted;
                err_prev = std::max(en, 1e-4);
                // A clamped step says nothing about the natural step size; keep h.
                if (!clamped) h = std::min(hs * std::clamp(fac, 0.2, 5.0), opt.h_max);
            } else {
                ++st.rejected;
                h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
                if (h < h_min) {
                    throw IntegrationError("integrate_dopri5: step size underflow (h = " + std::to_string(h) +
                                           ") at t = " + std::to_string(t));
                }
            }
        }
        out.push_back(y);
    }
    return out;
}

}  // namespace fluxcav

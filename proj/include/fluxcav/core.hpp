// core.hpp: shared numeric types, unit conventions, and error types.
//
// Unit convention used throughout the library:
//   * energies and frequencies are linear frequencies in GHz (hbar = 1 absorbed),
//   * times are in ns,
//   * unitary evolution uses the phase factor exp(-i 2 pi H t),
//   * loss rates are stored in 1/us at the API boundary and converted to 1/ns
//     inside the integrators.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fluxcav {

using cplx = std::complex<double>;
using MatrixC = Eigen::MatrixXcd;
using MatrixR = Eigen::MatrixXd;
using VectorC = Eigen::VectorXcd;
using VectorR = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPi = std::numbers::pi;

namespace units {
inline constexpr double kMHz = 1e-3;  // GHz per MHz
inline constexpr double kKHz = 1e-6;  // GHz per kHz
inline constexpr double kHz = 1e-9;   // GHz per Hz
inline constexpr double kUs = 1e3;    // ns per us

inline constexpr double to_mhz(double ghz) { return ghz / kMHz; }
inline constexpr double to_khz(double ghz) { return ghz / kKHz; }
inline constexpr double to_hz(double ghz) { return ghz / kHz; }
inline constexpr double per_us_to_per_ns(double rate) { return rate * 1e-3; }
}  // namespace units

// ------------------------------------------------------------------ errors

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A physical or numerical parameter is outside its domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

// A basis truncation is too small for the requested quantity.
class TruncationError : public Error {
public:
    using Error::Error;
};

// A problem would exceed a configured size cap.
class ResourceError : public Error {
public:
    using Error::Error;
};

// A dressed spectrum lacks a label needed by an extraction.
class IncompleteSpectrum : public Error {
public:
    using Error::Error;
};

// The time integrator failed (step-size underflow, invariant blow-up).
class IntegrationError : public Error {
public:
    using Error::Error;
};

// A root find or optimizer could not reach its target.
class OptimizationFailure : public Error {
public:
    using Error::Error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw InvalidParameter(what);
}

}  // namespace fluxcav

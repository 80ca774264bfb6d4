#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace freespike {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr cplx kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed polynomial text; `position` is the 0-based offset of the offending character.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position)
        : Error(message + " at position " + std::to_string(position)), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Argument outside the mathematical domain of an operation (real point inside a support,
/// singular resolvent, non-Hermitian input where Hermitian is required, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// Inconsistent sizes or arities.
class SizeError : public Error {
public:
    using Error::Error;
};

/// A closed real interval [lo, hi]; `atomic` marks the narrow interval around a detected atom.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool atomic = false;

    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Distance from x to a union of intervals (0 inside).
inline double distance_to(const std::vector<Interval>& set, double x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& iv : set) {
        if (iv.contains(x)) return 0.0;
        d = std::min(d, std::min(std::abs(x - iv.lo), std::abs(x - iv.hi)));
    }
    return d;
}

inline CMatrix hermitian_part(const CMatrix& m) { return 0.5 * (m + m.adjoint()); }

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace freespike

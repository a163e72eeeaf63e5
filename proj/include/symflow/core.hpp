#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace symflow {

template <int D>
using Vec = Eigen::Matrix<double, D, 1>;
template <int D>
using Mat = Eigen::Matrix<double, D, D>;

using Vec2 = Vec<2>;
using Vec3 = Vec<3>;
using Mat2 = Mat<2>;
using Mat3 = Mat<3>;

/// z-component of the cross product of two in-plane vectors.
inline double cross2(const Vec2& u, const Vec2& w) {
    return u.x() * w.y() - u.y() * w.x();
}

/// v x e3 for an in-plane vector v, assuming positive cell orientation.
/// With the out-of-plane unit normal fixed to +e3 this is the -90 degree
/// rotation of v.
inline Vec2 cross_e3(const Vec2& v) {
    return Vec2(v.y(), -v.x());
}

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A cell corner produced a non-positive discrete Jacobian (mesh inversion).
struct NonPositiveJacobian : SimError {
    NonPositiveJacobian(std::int64_t cell_, int corner_, double value_)
        : SimError("non-positive discrete Jacobian " + std::to_string(value_) +
                   " at cell " + std::to_string(cell_) + " corner " +
                   std::to_string(corner_)),
          cell(cell_), corner(corner_), value(value_) {}
    std::int64_t cell;
    int corner;
    double value;
};

/// Newton iteration for the implicit step exhausted its budget.
struct NoConvergence : SimError {
    NoConvergence(double residual_, double tolerance_, int iterations_)
        : SimError("implicit solve did not converge: |R|=" +
                   std::to_string(residual_) + " tol=" + std::to_string(tolerance_) +
                   " after " + std::to_string(iterations_) + " iterations"),
          residual(residual_), tolerance(tolerance_), iterations(iterations_) {}
    double residual;
    double tolerance;
    int iterations;
};

/// A state or update stopped being finite (blow-up).
struct NonFinite : SimError {
    using SimError::SimError;
};

struct ConfigError : SimError {
    using SimError::SimError;
};

}  // namespace symflow

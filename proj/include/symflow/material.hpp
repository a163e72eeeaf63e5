#pragma once

#include <cmath>

#include "symflow/core.hpp"
#include "symflow/kinematics.hpp"

namespace symflow {

/// Barotropic constitutive parameters. W(rho0,J) = A/(gamma-1) (J/rho0)^{1-gamma}
/// + B J/rho0 and P(J) = A (rho0/J)^gamma - B. Experiments usually specify
/// A through A = A_tilde * rho0^{-gamma}, in which case P(J) = A_tilde J^{-gamma} - B.
struct MaterialParams {
    double rho0 = 1.0;     // reference density, kg/m^2 (2D) or kg/m^3 (3D)
    double gamma = 2.0;    // adiabatic exponent, > 1
    double a_coeff = 0.0;  // A >= 0
    double b_coeff = 0.0;  // B >= 0

    static MaterialParams from_a(double rho0, double gamma, double a, double b) {
        MaterialParams m{rho0, gamma, a, b};
        m.validate();
        return m;
    }

    static MaterialParams from_a_tilde(double rho0, double gamma, double a_tilde, double b) {
        MaterialParams m{rho0, gamma, a_tilde * std::pow(rho0, -gamma), b};
        m.validate();
        return m;
    }

    void validate() const {
        if (!(rho0 > 0.0)) throw ConfigError("material rho0 must be positive");
        if (!(gamma > 1.0)) throw ConfigError("material gamma must exceed 1");
        if (a_coeff < 0.0 || b_coeff < 0.0) throw ConfigError("material A, B must be nonnegative");
    }

    /// A_tilde = A * rho0^gamma.
    double a_tilde() const { return a_coeff * std::pow(rho0, gamma); }
};

template <int D>
struct GravitySpec {
    Vec<D> g = Vec<D>::Zero();  // acceleration, m/s^2
    bool zero() const { return g.isZero(0.0); }
};

/// Specific internal energy W(rho0, J), J/kg.
inline double internal_energy(const MaterialParams& mat, double J) {
    if (!(J > 0.0)) throw SimError("internal_energy requires J > 0");
    const double jr = J / mat.rho0;
    return mat.a_coeff / (mat.gamma - 1.0) * std::pow(jr, 1.0 - mat.gamma) + mat.b_coeff * jr;
}

/// Material pressure P_W = -rho0 dW/dJ = A (rho0/J)^gamma - B, Pa.
inline double pressure(const MaterialParams& mat, double J) {
    if (!(J > 0.0)) throw SimError("pressure requires J > 0");
    return mat.a_coeff * std::pow(mat.rho0 / J, mat.gamma) - mat.b_coeff;
}

/// Corner-averaged internal energy of one cell: (1/4 or 1/8) sum_l W(J_l).
template <int D>
double cell_internal_energy(const MaterialParams& mat, const CellJacobians<D>& jac) {
    double s = 0.0;
    for (double J : jac.J) s += internal_energy(mat, J);
    return s / static_cast<double>(jac.J.size());
}

inline double cell_internal_energy_2d(const MaterialParams& mat, const CellJacobians<2>& jac) {
    return cell_internal_energy<2>(mat, jac);
}

/// Corner-averaged kinetic energy of one cell: (1/4 or 1/8) sum 1/2 |v|^2.
template <int D>
double cell_kinetic_energy(const StatePair<D>& pair, const Mesh<D>& mesh,
                           const CellIndex<D>& cell) {
    const auto nodes = cell_nodes(mesh, cell);
    double s = 0.0;
    for (const auto& n : nodes) s += 0.5 * pair.velocity(mesh.node_id(n)).squaredNorm();
    return s / static_cast<double>(nodes.size());
}

/// Corner-averaged gravitational potential of one cell: (1/4 or 1/8) sum g.phi.
template <int D>
double cell_potential_energy(const GravitySpec<D>& grav, const Configuration<D>& state,
                             const Mesh<D>& mesh, const CellIndex<D>& cell) {
    const auto nodes = cell_nodes(mesh, cell);
    double s = 0.0;
    for (const auto& n : nodes) s += grav.g.dot(state.x[mesh.node_id(n)]);
    return s / static_cast<double>(nodes.size());
}

}  // namespace symflow

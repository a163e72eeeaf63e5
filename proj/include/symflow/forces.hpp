#pragma once

#include "symflow/constraints.hpp"
#include "symflow/core.hpp"
#include "symflow/kinematics.hpp"
#include "symflow/material.hpp"
#include "symflow/mesh.hpp"
#include "symflow/state.hpp"

namespace symflow {

/// Per-corner force vectors of one cell, split by origin. Each corner force
/// is minus the gradient of the cell's spatial energy
/// measure * [rho0 W_d + rho0 Pi_d + Phi_pen] with respect to that corner
/// position; the corresponding coefficient of the discrete momentum balance
/// is -(M/4) v + dt * force (2D; M/8 in 3D).
template <int D>
struct CellForces {
    static constexpr int NC = detail::corners_per_cell<D>();
    std::array<Vec<D>, NC> pressure{};   // barotropic P_W terms
    std::array<Vec<D>, NC> penalty{};    // incompressibility r terms
    std::array<Vec<D>, NC> gravity{};    // -(M/NC) g per corner

    Vec<D> total(int corner) const {
        return pressure[corner] + penalty[corner] + gravity[corner];
    }
};

namespace detail {

// Which corners form each per-corner Jacobian: J_l is anchored at corner
// `anchor` with edges running to the listed corners. Differentiating
// J_l * measure with respect to the edge endpoints gives the force terms.
struct JacInfo2 { int anchor; int e[2]; };
struct JacInfo3 { int anchor; int e[3]; };

inline constexpr std::array<JacInfo2, 4> kJac2 = {{
    {0, {1, 2}}, {1, {3, 0}}, {2, {0, 3}}, {3, {2, 1}}}};

inline constexpr std::array<JacInfo3, 8> kJac3 = {{
    {0, {1, 2, 3}}, {1, {4, 0, 6}}, {2, {0, 4, 5}}, {3, {5, 6, 0}},
    {4, {2, 1, 7}}, {5, {7, 3, 2}}, {6, {3, 7, 1}}, {7, {6, 5, 4}}}};

/// Accumulates d(J_l * measure)/dphi terms weighted by pressures into the
/// per-corner arrays. `scale` carries the 1/NC corner weight (and the 1/2
/// of the midpoint variant).
template <int D>
void scatter_pressure_terms(const CellCornerPositions<D>& q,
                            const std::array<double, corners_per_cell<D>()>& Pw,
                            const std::array<double, corners_per_cell<D>()>& Ppen,
                            double scale, CellForces<D>& out) {
    if constexpr (D == 2) {
        for (int l = 0; l < 4; ++l) {
            const auto& info = kJac2[l];
            const Vec2 u = q[info.e[0]] - q[info.anchor];
            const Vec2 w = q[info.e[1]] - q[info.anchor];
            const Vec2 du = cross_e3(w);      // d(u x w)/du
            const Vec2 dw = -cross_e3(u);     // d(u x w)/dw
            const Vec2 danchor = -(du + dw);
            out.pressure[info.anchor] += scale * Pw[l] * danchor;
            out.pressure[info.e[0]] += scale * Pw[l] * du;
            out.pressure[info.e[1]] += scale * Pw[l] * dw;
            if (Ppen[l] != 0.0) {
                out.penalty[info.anchor] += scale * Ppen[l] * danchor;
                out.penalty[info.e[0]] += scale * Ppen[l] * du;
                out.penalty[info.e[1]] += scale * Ppen[l] * dw;
            }
        }
    } else {
        for (int l = 0; l < 8; ++l) {
            const auto& info = kJac3[l];
            const Vec3 e1 = q[info.e[0]] - q[info.anchor];
            const Vec3 e2 = q[info.e[1]] - q[info.anchor];
            const Vec3 e3 = q[info.e[2]] - q[info.anchor];
            const Vec3 n12 = e1.cross(e2);
            const Vec3 n23 = e2.cross(e3);
            const Vec3 n31 = e3.cross(e1);
            const Vec3 danchor = -(n12 + n23 + n31);
            out.pressure[info.anchor] += scale * Pw[l] * danchor;
            out.pressure[info.e[0]] += scale * Pw[l] * n23;
            out.pressure[info.e[1]] += scale * Pw[l] * n31;
            out.pressure[info.e[2]] += scale * Pw[l] * n12;
            if (Ppen[l] != 0.0) {
                out.penalty[info.anchor] += scale * Ppen[l] * danchor;
                out.penalty[info.e[0]] += scale * Ppen[l] * n23;
                out.penalty[info.e[1]] += scale * Ppen[l] * n31;
                out.penalty[info.e[2]] += scale * Ppen[l] * n12;
            }
        }
    }
}

template <int D>
CellForces<D> cell_forces_at(const CellCornerPositions<D>& q, const Mesh<D>& mesh,
                             const CellIndex<D>& cell, const MaterialParams& mat,
                             const GravitySpec<D>& grav, const ConstraintSet<D>& cs,
                             double weight) {
    constexpr int NC = corners_per_cell<D>();
    std::array<double, NC> J;
    if constexpr (D == 2) J = raw_jacobians_2d(q, 1.0 / mesh.cell_measure());
    else J = raw_jacobians_3d(q, 1.0 / mesh.cell_measure());
    check_positive(J, mesh, cell);

    std::array<double, NC> Pw, Ppen;
    for (int l = 0; l < NC; ++l) {
        Pw[l] = pressure(mat, J[l]);
        Ppen[l] = incompressibility_pressure(cs.incompressibility, J[l]);
    }
    CellForces<D> out;
    for (auto& v : out.pressure) v.setZero();
    for (auto& v : out.penalty) v.setZero();
    for (auto& v : out.gravity) v.setZero();
    scatter_pressure_terms<D>(q, Pw, Ppen, weight / NC, out);
    if (!grav.zero()) {
        const Vec<D> fg = -(mat.rho0 * mesh.cell_measure() / NC) * weight * grav.g;
        for (auto& v : out.gravity) v = fg;
    }
    return out;
}

}  // namespace detail

inline CellForces<2> cell_forces_explicit_2d(const Configuration<2>& state, const Mesh2D& mesh,
                                             const CellIndex<2>& cell, const MaterialParams& mat,
                                             const GravitySpec<2>& grav,
                                             const ConstraintSet<2>& cs) {
    return detail::cell_forces_at<2>(detail::gather_corners(state, mesh, cell), mesh, cell, mat,
                                     grav, cs, 1.0);
}

inline CellForces<3> cell_forces_explicit_3d(const Configuration<3>& state, const Mesh3D& mesh,
                                             const CellIndex<3>& cell, const MaterialParams& mat,
                                             const GravitySpec<3>& grav,
                                             const ConstraintSet<3>& cs) {
    return detail::cell_forces_at<3>(detail::gather_corners(state, mesh, cell), mesh, cell, mat,
                                     grav, cs, 1.0);
}

template <int D>
CellForces<D> cell_forces_explicit(const Configuration<D>& state, const Mesh<D>& mesh,
                                   const CellIndex<D>& cell, const MaterialParams& mat,
                                   const GravitySpec<D>& grav, const ConstraintSet<D>& cs) {
    return detail::cell_forces_at<D>(detail::gather_corners(state, mesh, cell), mesh, cell, mat,
                                     grav, cs, 1.0);
}

/// Midpoint variant: the explicit kernel evaluated on the averaged
/// positions and halved, because the averaged configuration depends on each
/// time level with weight 1/2. It is minus the gradient of the midpoint
/// cell energy with respect to the next-level corner positions; the same
/// value is the gradient with respect to the previous level.
inline CellForces<2> cell_forces_midpoint_2d(const StatePair<2>& pair, const Mesh2D& mesh,
                                             const CellIndex<2>& cell, const MaterialParams& mat,
                                             const GravitySpec<2>& grav,
                                             const ConstraintSet<2>& cs) {
    auto q = detail::gather_corners(pair.prev, mesh, cell);
    const auto qn = detail::gather_corners(pair.next, mesh, cell);
    for (std::size_t k = 0; k < q.p.size(); ++k) q.p[k] = 0.5 * (q.p[k] + qn.p[k]);
    return detail::cell_forces_at<2>(q, mesh, cell, mat, grav, cs, 0.5);
}

/// Spatial potential energy of one cell (the part forces differentiate):
/// measure * [rho0 W_d + rho0 Pi_d + Phi_d0].
template <int D>
double cell_spatial_energy(const Configuration<D>& state, const Mesh<D>& mesh,
                           const CellIndex<D>& cell, const MaterialParams& mat,
                           const GravitySpec<D>& grav, const ConstraintSet<D>& cs) {
    const auto jac = jacobians<D>(state, mesh, cell);
    double e = mat.rho0 * cell_internal_energy<D>(mat, jac);
    e += incompressibility_energy<D>(cs.incompressibility, jac);
    e += mat.rho0 * cell_potential_energy<D>(grav, state, mesh, cell);
    return mesh.cell_measure() * e;
}

/// Total contact penalty force on one node.
template <int D>
Vec<D> node_contact_force(const ConstraintSet<D>& cs, const Vec<D>& phi, double cell_measure) {
    Vec<D> f = Vec<D>::Zero();
    for (const auto& c : cs.contacts) f += contact_energy_and_force(c, phi, cell_measure, 0.0).second;
    return f;
}

/// Total contact penalty energy of one node, including the measure weight.
template <int D>
double node_contact_energy(const ConstraintSet<D>& cs, const Vec<D>& phi, double cell_measure) {
    double e = 0.0;
    for (const auto& c : cs.contacts) e += contact_energy_and_force(c, phi, cell_measure, 0.0).first;
    return cell_measure * e;
}

}  // namespace symflow

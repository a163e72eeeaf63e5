#pragma once

#include "symflow/core.hpp"
#include "symflow/mesh.hpp"
#include "symflow/state.hpp"

namespace symflow {

/// Per-corner column pairs (2D) of the discrete deformation gradient. The
/// corner order matches cell_nodes; each corner l holds the two edge
/// vectors that form the columns of F_l.
struct CellEdgeVectors2D {
    std::array<std::array<Vec2, 2>, 4> col;
};

template <int D>
struct CellGradients {
    std::array<Mat<D>, detail::corners_per_cell<D>()> F;
};

template <int D>
struct CellJacobians {
    std::array<double, detail::corners_per_cell<D>()> J;
};

namespace detail {

template <int D>
struct CellCornerPositions {
    std::array<Vec<D>, corners_per_cell<D>()> p;
    const Vec<D>& operator[](int i) const { return p[i]; }
};

template <int D>
CellCornerPositions<D> gather_corners(const Configuration<D>& state, const Mesh<D>& mesh,
                                      const CellIndex<D>& cell) {
    const auto nodes = cell_nodes(mesh, cell);
    CellCornerPositions<D> out;
    for (std::size_t k = 0; k < nodes.size(); ++k) out.p[k] = state.x[mesh.node_id(nodes[k])];
    return out;
}

}  // namespace detail

/// Edge vectors of one 2D cell, normalized by the reference spacings.
/// Corner order: (a,b), (a+1,b), (a,b+1), (a+1,b+1); the second cell node
/// is the anchor of the edge pair reversed through the sign relations
/// F3;a,b = -F1;a-1,b and F4;a,b = -F2;a,b-1.
inline CellEdgeVectors2D edge_vectors_2d(const Configuration<2>& state, const Mesh2D& mesh,
                                         const CellIndex<2>& cell) {
    const auto q = detail::gather_corners(state, mesh, cell);
    const double ds1 = mesh.spacing(0), ds2 = mesh.spacing(1);
    CellEdgeVectors2D ev;
    ev.col[0] = {Vec2((q[1] - q[0]) / ds1), Vec2((q[2] - q[0]) / ds2)};
    ev.col[1] = {Vec2((q[3] - q[1]) / ds2), Vec2((q[0] - q[1]) / ds1)};
    ev.col[2] = {Vec2((q[0] - q[2]) / ds2), Vec2((q[3] - q[2]) / ds1)};
    ev.col[3] = {Vec2((q[2] - q[3]) / ds1), Vec2((q[1] - q[3]) / ds2)};
    return ev;
}

inline CellGradients<2> deformation_gradients_2d(const Configuration<2>& state,
                                                 const Mesh2D& mesh,
                                                 const CellIndex<2>& cell) {
    const auto ev = edge_vectors_2d(state, mesh, cell);
    CellGradients<2> g;
    for (int l = 0; l < 4; ++l) {
        g.F[l].col(0) = ev.col[l][0];
        g.F[l].col(1) = ev.col[l][1];
    }
    return g;
}

namespace detail {

inline std::array<double, 4> raw_jacobians_2d(const CellCornerPositions<2>& q, double inv_meas) {
    return {cross2(q[1] - q[0], q[2] - q[0]) * inv_meas,
            cross2(q[3] - q[1], q[0] - q[1]) * inv_meas,
            cross2(q[0] - q[2], q[3] - q[2]) * inv_meas,
            cross2(q[2] - q[3], q[1] - q[3]) * inv_meas};
}

inline std::array<double, 8> raw_jacobians_3d(const CellCornerPositions<3>& q, double inv_meas) {
    auto trip = [](const Vec3& u, const Vec3& w, const Vec3& z) { return u.cross(w).dot(z); };
    // Edge triples anchored at each corner; see the corresponding force
    // kernel in forces.hpp which differentiates these expressions.
    return {trip(q[1] - q[0], q[2] - q[0], q[3] - q[0]) * inv_meas,
            trip(q[4] - q[1], q[0] - q[1], q[6] - q[1]) * inv_meas,
            trip(q[0] - q[2], q[4] - q[2], q[5] - q[2]) * inv_meas,
            trip(q[5] - q[3], q[6] - q[3], q[0] - q[3]) * inv_meas,
            trip(q[2] - q[4], q[1] - q[4], q[7] - q[4]) * inv_meas,
            trip(q[7] - q[5], q[3] - q[5], q[2] - q[5]) * inv_meas,
            trip(q[3] - q[6], q[7] - q[6], q[1] - q[6]) * inv_meas,
            trip(q[6] - q[7], q[5] - q[7], q[4] - q[7]) * inv_meas};
}

template <int D, std::size_t N>
void check_positive(const std::array<double, N>& J, const Mesh<D>& mesh,
                    const CellIndex<D>& cell) {
    for (std::size_t l = 0; l < N; ++l)
        if (!(J[l] > 0.0)) throw NonPositiveJacobian(mesh.cell_id(cell), static_cast<int>(l), J[l]);
}

}  // namespace detail

/// Signed per-corner Jacobians of a 2D cell. The sign comes from the
/// determinant form; non-positive values signal mesh inversion and abort.
inline CellJacobians<2> jacobians_2d(const Configuration<2>& state, const Mesh2D& mesh,
                                     const CellIndex<2>& cell) {
    const auto q = detail::gather_corners(state, mesh, cell);
    CellJacobians<2> out{detail::raw_jacobians_2d(q, 1.0 / mesh.cell_measure())};
    detail::check_positive(out.J, mesh, cell);
    return out;
}

/// Per-corner Jacobians of a 3D cell as scalar triple products.
inline CellJacobians<3> jacobians_3d(const Configuration<3>& state, const Mesh3D& mesh,
                                     const CellIndex<3>& cell) {
    const auto q = detail::gather_corners(state, mesh, cell);
    CellJacobians<3> out{detail::raw_jacobians_3d(q, 1.0 / mesh.cell_measure())};
    detail::check_positive(out.J, mesh, cell);
    return out;
}

template <int D>
CellJacobians<D> jacobians(const Configuration<D>& state, const Mesh<D>& mesh,
                           const CellIndex<D>& cell) {
    if constexpr (D == 2) return jacobians_2d(state, mesh, cell);
    else return jacobians_3d(state, mesh, cell);
}

/// Edge vectors built from the averaged positions (prev+next)/2.
inline CellEdgeVectors2D midpoint_edge_vectors_2d(const StatePair<2>& pair, const Mesh2D& mesh,
                                                  const CellIndex<2>& cell) {
    return edge_vectors_2d(midpoint_configuration(pair), mesh, cell);
}

/// d det(F)/dF = det(F) F^{-T}, evaluated as the cofactor matrix.
template <int D>
Mat<D> jacobian_derivative(const Mat<D>& F) {
    const double det = F.determinant();
    if (!(det > 0.0)) throw NonPositiveJacobian(-1, -1, det);
    Mat<D> c;
    if constexpr (D == 2) {
        c << F(1, 1), -F(1, 0), -F(0, 1), F(0, 0);
    } else {
        c.col(0) = Vec3(F.col(1)).cross(Vec3(F.col(2)));
        c.col(1) = Vec3(F.col(2)).cross(Vec3(F.col(0)));
        c.col(2) = Vec3(F.col(0)).cross(Vec3(F.col(1)));
    }
    return c;
}

}  // namespace symflow

#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

#include "symflow/stepper.hpp"

namespace symflow {

/// Energies and momentum maps of one state pair. The rotational momentum is
/// a scalar in 2D and a 3-vector in 3D.
template <int D>
struct DiagnosticsRecord {
    using Rot = std::conditional_t<D == 2, double, Vec3>;

    double t = 0.0;
    double e_kinetic = 0.0;
    double e_internal = 0.0;
    double e_potential = 0.0;
    double e_penalty = 0.0;
    double e_total = 0.0;
    Rot j_rot{};
    Vec<D> j_lin = Vec<D>::Zero();
};

namespace detail {
inline double rot_moment(const Vec2& phi, const Vec2& mv) { return cross2(phi, mv); }
inline Vec3 rot_moment(const Vec3& phi, const Vec3& mv) { return phi.cross(mv); }
}  // namespace detail

/// Linear and angular momentum maps of a state pair via the lumped-node
/// sums sum_n m_n v_n and sum_n phi_n x m_n v_n, which telescope from the
/// per-cell corner sums.
template <int D>
std::pair<typename DiagnosticsRecord<D>::Rot, Vec<D>> momentum_map(
    const StatePair<D>& pair, const Mesh<D>& mesh, const MaterialParams& mat) {
    const LumpedMassField mass = assemble_lumped_mass(mesh, mat);
    typename DiagnosticsRecord<D>::Rot jrot{};
    Vec<D> jlin = Vec<D>::Zero();
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) {
        const Vec<D> mv = mass[n] * pair.velocity(n);
        jlin += mv;
        jrot += detail::rot_moment(pair.prev.x[n], mv);
    }
    return {jrot, jlin};
}

inline std::pair<double, Vec2> momentum_map_2d(const StatePair<2>& pair, const Mesh2D& mesh,
                                               const MaterialParams& mat) {
    return momentum_map<2>(pair, mesh, mat);
}

inline std::pair<Vec3, Vec3> momentum_map_3d(const StatePair<3>& pair, const Mesh3D& mesh,
                                             const MaterialParams& mat) {
    return momentum_map<3>(pair, mesh, mat);
}

/// Total energy split of a state pair:
/// E = sum_cells measure [rho0 K_d + rho0 W_d + rho0 Pi_d + Phi_d0]
///     + sum_nodes contact penalty energies.
template <int D>
DiagnosticsRecord<D> total_energy(const StatePair<D>& pair, const Mesh<D>& mesh,
                                  const MaterialParams& mat, const GravitySpec<D>& grav,
                                  const ConstraintSet<D>& cs) {
    DiagnosticsRecord<D> rec;
    rec.t = pair.prev.time_index * pair.dt;
    const LumpedMassField mass = assemble_lumped_mass(mesh, mat);
    // Kinetic and gravity terms telescope from corner averages to lumped
    // node sums; evaluate them node-wise.
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) {
        rec.e_kinetic += 0.5 * mass[n] * pair.velocity(n).squaredNorm();
        rec.e_potential += mass[n] * grav.g.dot(pair.prev.x[n]);
    }
    const double meas = mesh.cell_measure();
    for (std::int64_t c = 0; c < mesh.cell_count(); ++c) {
        const auto cell = mesh.cell_from_id(c);
        const auto jac = jacobians<D>(pair.prev, mesh, cell);
        rec.e_internal += meas * mat.rho0 * cell_internal_energy<D>(mat, jac);
        rec.e_penalty += meas * incompressibility_energy<D>(cs.incompressibility, jac);
    }
    if (!cs.contacts.empty()) {
        for (std::int64_t n = 0; n < mesh.node_count(); ++n)
            rec.e_penalty += node_contact_energy<D>(cs, pair.prev.x[n], meas);
    }
    rec.e_total = rec.e_kinetic + rec.e_internal + rec.e_potential + rec.e_penalty;
    auto [jr, jl] = momentum_map<D>(pair, mesh, mat);
    rec.j_rot = jr;
    rec.j_lin = jl;
    return rec;
}

/// L2 position error sqrt(sum_n |phi - phi_ref|^2). When the reference is
/// finer, it is restricted to the coarse lattice; the node counts must
/// share a common lattice (each axis refined by one integer factor).
template <int D>
double l2_error(const Configuration<D>& state, const Configuration<D>& reference) {
    std::array<int, D> stride;
    for (int d = 0; d < D; ++d) {
        const int ca = state.nodes[d] - 1, cb = reference.nodes[d] - 1;
        if (ca <= 0 || cb <= 0 || cb % ca != 0)
            throw SimError("l2_error: states do not share a common lattice");
        stride[d] = cb / ca;
    }
    auto ref_id = [&](std::array<int, D> n) {
        std::int64_t id = static_cast<std::int64_t>(n[D - 1]) * stride[D - 1];
        for (int d = D - 2; d >= 0; --d) id = id * reference.nodes[d] + n[d] * stride[d];
        return id;
    };
    double s = 0.0;
    std::array<int, D> n{};
    for (std::int64_t id = 0; id < static_cast<std::int64_t>(state.x.size()); ++id) {
        s += (state.x[id] - reference.x[ref_id(n)]).squaredNorm();
        for (int d = 0; d < D; ++d) {
            if (++n[d] < state.nodes[d]) break;
            n[d] = 0;
        }
    }
    return std::sqrt(s);
}

struct ConvergenceRow {
    double h = 0.0;
    double error = 0.0;
    double rate = std::numeric_limits<double>::quiet_NaN();  // undefined on the first row
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
};

/// Rates log2(e_{i-1}/e_i) for a strictly halving resolution sequence.
inline ConvergenceReport convergence_rates(const std::vector<std::pair<double, double>>& errors) {
    ConvergenceReport rep;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        const auto [h, e] = errors[i];
        if (!(e > 0.0)) throw SimError("convergence_rates: errors must be positive");
        if (i > 0) {
            const double ratio = errors[i - 1].first / h;
            if (std::abs(ratio - 2.0) > 1e-9 * 2.0)
                throw SimError("convergence_rates: resolutions must halve");
        }
        ConvergenceRow row{h, e, std::numeric_limits<double>::quiet_NaN()};
        if (i > 0) row.rate = std::log2(errors[i - 1].second / e);
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace symflow

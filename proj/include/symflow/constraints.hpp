#pragma once

#include <vector>

#include "symflow/core.hpp"
#include "symflow/kinematics.hpp"

namespace symflow {

/// Quadratic penalty enforcing J = 1. r = 0 disables it and recovers the
/// pure barotropic model.
struct IncompressibilityPenalty {
    double r = 0.0;
    bool active() const { return r > 0.0; }
};

/// Per-corner incompressibility energy density: (1/4 or 1/8) sum (r/2)(J_l-1)^2.
template <int D>
double incompressibility_energy(const IncompressibilityPenalty& pen,
                                const CellJacobians<D>& jac) {
    if (!pen.active()) return 0.0;
    double s = 0.0;
    for (double J : jac.J) s += 0.5 * pen.r * (J - 1.0) * (J - 1.0);
    return s / static_cast<double>(jac.J.size());
}

/// Effective pressure contribution of the penalty, added to P_W in the
/// force kernels: P_pen = -r (J - 1).
inline double incompressibility_pressure(const IncompressibilityPenalty& pen, double J) {
    return -pen.r * (J - 1.0);
}

enum class ContactKind { HalfSpace, Box };

/// Impenetrability constraint Psi(phi) <= 0 with quadratic penalty
/// (1/2) K Psi^2 active when Psi >= 0.
///
/// HalfSpace: Psi = offset - normal.phi with |normal| = 1 pointing from the
/// obstacle into the admissible region (a floor at height y0 with fluid
/// above has normal (0,1) and offset y0).
/// Box: Psi = penetration depth when phi is inside [lo,hi], gradient is the
/// unit outward normal of the nearest face; ties prefer the smaller axis.
template <int D>
struct ContactConstraint {
    ContactKind kind = ContactKind::HalfSpace;
    Vec<D> normal = Vec<D>::Zero();
    double offset = 0.0;
    Vec<D> lo = Vec<D>::Zero();
    Vec<D> hi = Vec<D>::Zero();
    double stiffness = 0.0;  // K >= 0
    bool active = true;

    static ContactConstraint half_space(const Vec<D>& normal, double offset, double K) {
        ContactConstraint c;
        c.kind = ContactKind::HalfSpace;
        c.normal = normal.normalized();
        c.offset = offset;
        c.stiffness = K;
        return c;
    }

    static ContactConstraint box(const Vec<D>& lo, const Vec<D>& hi, double K) {
        ContactConstraint c;
        c.kind = ContactKind::Box;
        c.lo = lo;
        c.hi = hi;
        c.stiffness = K;
        return c;
    }
};

template <int D>
struct ContactEval {
    double psi = 0.0;
    Vec<D> grad = Vec<D>::Zero();
};

/// Signed constraint value and gradient at a point. Outside the obstacle
/// psi < 0 and the gradient is zero.
template <int D>
ContactEval<D> contact_evaluate(const ContactConstraint<D>& c, const Vec<D>& phi) {
    ContactEval<D> out;
    if (c.kind == ContactKind::HalfSpace) {
        out.psi = c.offset - c.normal.dot(phi);
        out.grad = out.psi < 0.0 ? Vec<D>::Zero() : Vec<D>(-c.normal);
        return out;
    }
    double best = std::numeric_limits<double>::infinity();
    int axis = -1, side = 0;
    bool inside = true;
    for (int d = 0; d < D && inside; ++d) {
        const double dlo = phi[d] - c.lo[d];
        const double dhi = c.hi[d] - phi[d];
        if (dlo <= 0.0 || dhi <= 0.0) inside = false;
        if (dlo < best) { best = dlo; axis = d; side = -1; }
        if (dhi < best) { best = dhi; axis = d; side = +1; }
    }
    if (!inside) {
        out.psi = -1.0;
        return out;
    }
    out.psi = best;
    out.grad[axis] = static_cast<double>(side);
    return out;
}

/// Penalty energy density (1/2) K Psi_+^2 and the nodal force
/// -cell_measure * K * Psi_+ * grad(Psi). The energy is returned without the
/// cell-measure weight; callers integrating it multiply by the measure.
template <int D>
std::pair<double, Vec<D>> contact_energy_and_force(const ContactConstraint<D>& c,
                                                   const Vec<D>& phi, double cell_measure,
                                                   double /*dt*/) {
    if (!c.active || c.stiffness <= 0.0) return {0.0, Vec<D>::Zero()};
    const auto ev = contact_evaluate(c, phi);
    if (ev.psi < 0.0) return {0.0, Vec<D>::Zero()};
    const double energy = 0.5 * c.stiffness * ev.psi * ev.psi;
    return {energy, Vec<D>(-cell_measure * c.stiffness * ev.psi * ev.grad)};
}

template <int D>
struct ConstraintSet {
    IncompressibilityPenalty incompressibility;
    std::vector<ContactConstraint<D>> contacts;

    bool empty() const { return !incompressibility.active() && contacts.empty(); }
};

}  // namespace symflow

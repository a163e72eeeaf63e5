#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "symflow/constraints.hpp"
#include "symflow/material.hpp"
#include "symflow/stepper.hpp"

namespace symflow {

struct AtRest {};

/// Displacement applied at the first time level: phi^1 = reference + d,
/// equivalently an initial velocity d/dt at the named node.
struct NodeDisplacement {
    std::vector<int> node;  // lattice coordinates, dimension entries
    std::vector<double> displacement;
};

/// Initial speed on one boundary face: v(node) = coefficients * (first
/// varying lattice coordinate of the face).
struct BoundaryVelocityProfile {
    std::string edge;                  // "a_min","a_max","b_min","b_max","c_min","c_max"
    std::vector<double> per_index;     // velocity per unit lattice index
};

using InitialCondition = std::variant<AtRest, std::vector<NodeDisplacement>, BoundaryVelocityProfile>;

enum class IntegratorKind { Explicit, ImplicitMidpoint };

struct IntegratorSpec {
    IntegratorKind kind = IntegratorKind::Explicit;
    SolverSettings solver;
};

struct OutputSpec {
    std::string directory = "out";
    int snapshot_stride = 100;
    int diagnostics_stride = 10;
};

struct ContactSpec {
    std::string kind;                // "half_space" | "box"
    std::vector<double> normal;      // half_space
    double offset = 0.0;             // half_space
    std::vector<double> lo, hi;      // box
    double stiffness = 0.0;
};

/// Full description of one run; dimension-erased so configs parse before a
/// mesh dimension is chosen.
struct ScenarioConfig {
    std::string name = "custom";
    int dimension = 2;
    std::vector<int> cells;
    std::vector<double> spacing;
    double rho0 = 997.0;
    double gamma = 6.0;
    std::optional<double> a_tilde;   // exactly one of a_tilde / a_coeff
    std::optional<double> a_coeff;
    double b_coeff = 0.0;
    bool gravity_enabled = false;
    std::vector<double> gravity_vector;  // default: -9.81 on the last axis
    double penalty_r = 0.0;
    std::vector<ContactSpec> contacts;
    double dt = 0.0;
    long steps = 0;
    IntegratorSpec integrator;
    InitialCondition initial = AtRest{};
    OutputSpec output;

    void validate() const {
        if (dimension != 2 && dimension != 3) throw ConfigError("dimension must be 2 or 3");
        if (static_cast<int>(cells.size()) != dimension ||
            static_cast<int>(spacing.size()) != dimension)
            throw ConfigError("mesh cells/spacing must have one entry per dimension");
        for (int c : cells)
            if (c < 1) throw ConfigError("mesh cells must be >= 1");
        for (double s : spacing)
            if (!(s > 0.0)) throw ConfigError("mesh spacing must be > 0");
        if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
        if (steps < 1) throw ConfigError("steps must be >= 1");
        if (a_tilde.has_value() == a_coeff.has_value())
            throw ConfigError("material needs exactly one of A or A_tilde");
        if (penalty_r < 0.0) throw ConfigError("incompressibility r must be >= 0");
        if (!gravity_vector.empty() && static_cast<int>(gravity_vector.size()) != dimension)
            throw ConfigError("gravity vector must match the dimension");
        if (output.snapshot_stride < 1 || output.diagnostics_stride < 1)
            throw ConfigError("output strides must be >= 1");
        for (const auto& c : contacts) {
            if (c.kind != "half_space" && c.kind != "box")
                throw ConfigError("contact kind must be half_space or box");
            if (c.stiffness < 0.0) throw ConfigError("contact stiffness must be >= 0");
            if (c.kind == "half_space" && static_cast<int>(c.normal.size()) != dimension)
                throw ConfigError("half_space normal must match the dimension");
            if (c.kind == "box" && (static_cast<int>(c.lo.size()) != dimension ||
                                    static_cast<int>(c.hi.size()) != dimension))
                throw ConfigError("box bounds must match the dimension");
        }
        if (const auto* nd = std::get_if<std::vector<NodeDisplacement>>(&initial)) {
            for (const auto& item : *nd) {
                if (static_cast<int>(item.node.size()) != dimension ||
                    static_cast<int>(item.displacement.size()) != dimension)
                    throw ConfigError("node displacement entries must match the dimension");
                for (int d = 0; d < dimension; ++d)
                    if (item.node[d] < 0 || item.node[d] > cells[d])
                        throw ConfigError("perturbation node index out of range");
                for (double v : item.displacement)
                    if (!std::isfinite(v)) throw ConfigError("displacement must be finite");
            }
        }
        if (integrator.kind == IntegratorKind::ImplicitMidpoint && dimension == 3)
            throw ConfigError("the implicit midpoint integrator is available in 2D only");
    }

    double domain_extent(int axis) const { return cells[axis] * spacing[axis]; }

    MaterialParams material() const {
        return a_tilde ? MaterialParams::from_a_tilde(rho0, gamma, *a_tilde, b_coeff)
                       : MaterialParams::from_a(rho0, gamma, *a_coeff, b_coeff);
    }

    template <int D>
    Mesh<D> mesh() const {
        std::array<int, D> c;
        std::array<double, D> s;
        for (int d = 0; d < D; ++d) { c[d] = cells[d]; s[d] = spacing[d]; }
        return Mesh<D>(c, s);
    }

    template <int D>
    GravitySpec<D> gravity() const {
        GravitySpec<D> g;
        if (!gravity_enabled) return g;
        if (gravity_vector.empty()) {
            g.g[D - 1] = -9.81;
        } else {
            for (int d = 0; d < D; ++d) g.g[d] = gravity_vector[d];
        }
        return g;
    }

    template <int D>
    ConstraintSet<D> constraint_set() const {
        ConstraintSet<D> cs;
        cs.incompressibility.r = penalty_r;
        for (const auto& spec : contacts) {
            if (spec.kind == "half_space") {
                Vec<D> n;
                for (int d = 0; d < D; ++d) n[d] = spec.normal[d];
                cs.contacts.push_back(ContactConstraint<D>::half_space(n, spec.offset, spec.stiffness));
            } else {
                Vec<D> lo, hi;
                for (int d = 0; d < D; ++d) { lo[d] = spec.lo[d]; hi[d] = spec.hi[d]; }
                cs.contacts.push_back(ContactConstraint<D>::box(lo, hi, spec.stiffness));
            }
        }
        return cs;
    }
};

namespace detail {

inline int edge_axis(const std::string& edge, int dimension) {
    if (edge.size() != 5 || (edge.substr(1) != "_min" && edge.substr(1) != "_max"))
        throw ConfigError("edge must look like a_min, b_max, ...");
    const int axis = edge[0] - 'a';
    if (axis < 0 || axis >= dimension) throw ConfigError("edge axis out of range");
    return axis;
}

}  // namespace detail

/// Initial positions phi^0 (the reference configuration) and velocities v^0
/// encoded by the scenario's initial-condition block.
template <int D>
std::pair<Configuration<D>, std::vector<Vec<D>>> build_initial_state(const ScenarioConfig& cfg,
                                                                     const Mesh<D>& mesh) {
    Configuration<D> phi0 = reference_configuration(mesh);
    std::vector<Vec<D>> v0(mesh.node_count(), Vec<D>::Zero());
    if (const auto* nds = std::get_if<std::vector<NodeDisplacement>>(&cfg.initial)) {
        for (const auto& nd : *nds) {
            NodeIndex<D> n;
            for (int d = 0; d < D; ++d) n[d] = nd.node[d];
            for (int d = 0; d < D; ++d) v0[mesh.node_id(n)][d] = nd.displacement[d] / cfg.dt;
        }
    } else if (const auto* bvp = std::get_if<BoundaryVelocityProfile>(&cfg.initial)) {
        const int axis = detail::edge_axis(bvp->edge, D);
        const bool at_max = bvp->edge.substr(1) == "_max";
        const int fixed = at_max ? mesh.cells()[axis] : 0;
        // The first non-fixed axis indexes the profile.
        const int run_axis = axis == 0 ? 1 : 0;
        for (std::int64_t id = 0; id < mesh.node_count(); ++id) {
            const auto n = mesh.node_from_id(id);
            if (n[axis] != fixed) continue;
            for (int d = 0; d < D; ++d) v0[id][d] = bvp->per_index[d] * n[run_axis];
        }
    }
    return {phi0, v0};
}

}  // namespace symflow

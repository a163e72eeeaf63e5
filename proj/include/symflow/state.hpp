#pragma once

#include <cmath>
#include <vector>

#include "symflow/core.hpp"
#include "symflow/mesh.hpp"

namespace symflow {

/// Node positions at one time level.
template <int D>
struct Configuration {
    Configuration() = default;
    explicit Configuration(const Mesh<D>& mesh, int time_index_ = 0)
        : time_index(time_index_), nodes(mesh.nodes_per_axis()),
          x(mesh.node_count(), Vec<D>::Zero()) {}

    int time_index = 0;
    std::array<int, D> nodes{};
    std::vector<Vec<D>> x;

    Vec<D>& at(std::int64_t id) { return x[id]; }
    const Vec<D>& at(std::int64_t id) const { return x[id]; }

    bool finite() const {
        for (const auto& p : x)
            if (!p.allFinite()) return false;
        return true;
    }
};

/// Positions equal to the reference configuration of the mesh.
template <int D>
Configuration<D> reference_configuration(const Mesh<D>& mesh, int time_index = 0) {
    Configuration<D> c(mesh, time_index);
    for (std::int64_t id = 0; id < mesh.node_count(); ++id)
        c.x[id] = mesh.reference_position(mesh.node_from_id(id));
    return c;
}

/// Two consecutive time levels; the discrete velocity is (next-prev)/dt.
template <int D>
struct StatePair {
    Configuration<D> prev;
    Configuration<D> next;
    double dt = 0.0;

    Vec<D> velocity(std::int64_t id) const { return (next.x[id] - prev.x[id]) / dt; }
};

template <int D>
StatePair<D> make_state_pair(Configuration<D> prev, Configuration<D> next, double dt) {
    if (!(dt > 0.0)) throw ConfigError("state pair requires dt > 0");
    if (prev.nodes != next.nodes) throw ConfigError("state pair levels live on different meshes");
    return StatePair<D>{std::move(prev), std::move(next), dt};
}

/// Node-wise average of the two levels, used by the midpoint scheme.
template <int D>
Configuration<D> midpoint_configuration(const StatePair<D>& pair) {
    Configuration<D> mid = pair.prev;
    for (std::size_t i = 0; i < mid.x.size(); ++i)
        mid.x[i] = 0.5 * (pair.prev.x[i] + pair.next.x[i]);
    return mid;
}

}  // namespace symflow

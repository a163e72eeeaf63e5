#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "symflow/core.hpp"

namespace symflow {

template <int D>
using NodeIndex = std::array<int, D>;
template <int D>
using CellIndex = std::array<int, D>;

/// Structured uniform grid of the reference configuration. A mesh with
/// cells (A,B[,C]) has (A+1)(B+1)[(C+1)] nodes. Immutable after
/// construction; node and cell ids are linearized with the first lattice
/// coordinate fastest.
template <int D>
class Mesh {
    static_assert(D == 2 || D == 3);

  public:
    Mesh(const std::array<int, D>& cells, const std::array<double, D>& spacing)
        : cells_(cells), spacing_(spacing) {
        for (int d = 0; d < D; ++d) {
            if (cells_[d] < 1) throw ConfigError("mesh needs at least one cell per axis");
            if (!(spacing_[d] > 0.0)) throw ConfigError("mesh spacing must be positive");
        }
    }

    const std::array<int, D>& cells() const { return cells_; }
    const std::array<double, D>& spacing() const { return spacing_; }
    double spacing(int axis) const { return spacing_[axis]; }

    std::array<int, D> nodes_per_axis() const {
        std::array<int, D> n;
        for (int d = 0; d < D; ++d) n[d] = cells_[d] + 1;
        return n;
    }

    std::int64_t node_count() const {
        std::int64_t n = 1;
        for (int d = 0; d < D; ++d) n *= cells_[d] + 1;
        return n;
    }

    std::int64_t cell_count() const {
        std::int64_t n = 1;
        for (int d = 0; d < D; ++d) n *= cells_[d];
        return n;
    }

    /// Measure of one reference cell: ds1*ds2(*ds3).
    double cell_measure() const {
        double m = 1.0;
        for (int d = 0; d < D; ++d) m *= spacing_[d];
        return m;
    }

    bool node_valid(const NodeIndex<D>& n) const {
        for (int d = 0; d < D; ++d)
            if (n[d] < 0 || n[d] > cells_[d]) return false;
        return true;
    }

    bool cell_valid(const CellIndex<D>& c) const {
        for (int d = 0; d < D; ++d)
            if (c[d] < 0 || c[d] >= cells_[d]) return false;
        return true;
    }

    std::int64_t node_id(const NodeIndex<D>& n) const {
        std::int64_t id = n[D - 1];
        for (int d = D - 2; d >= 0; --d) id = id * (cells_[d] + 1) + n[d];
        return id;
    }

    std::int64_t cell_id(const CellIndex<D>& c) const {
        std::int64_t id = c[D - 1];
        for (int d = D - 2; d >= 0; --d) id = id * cells_[d] + c[d];
        return id;
    }

    NodeIndex<D> node_from_id(std::int64_t id) const {
        NodeIndex<D> n;
        for (int d = 0; d < D; ++d) {
            n[d] = static_cast<int>(id % (cells_[d] + 1));
            id /= cells_[d] + 1;
        }
        return n;
    }

    CellIndex<D> cell_from_id(std::int64_t id) const {
        CellIndex<D> c;
        for (int d = 0; d < D; ++d) {
            c[d] = static_cast<int>(id % cells_[d]);
            id /= cells_[d];
        }
        return c;
    }

    /// Position of a node in the reference configuration.
    Vec<D> reference_position(const NodeIndex<D>& n) const {
        Vec<D> x;
        for (int d = 0; d < D; ++d) x[d] = n[d] * spacing_[d];
        return x;
    }

  private:
    std::array<int, D> cells_;
    std::array<double, D> spacing_;
};

using Mesh2D = Mesh<2>;
using Mesh3D = Mesh<3>;

namespace detail {
template <int D>
constexpr int corners_per_cell() { return D == 2 ? 4 : 8; }

/// Corner offsets in the canonical corner order. 2D: (a,b),(a+1,b),(a,b+1),
/// (a+1,b+1). 3D: (a,b,c),(a+1,b,c),(a,b+1,c),(a,b,c+1),(a+1,b+1,c),
/// (a,b+1,c+1),(a+1,b,c+1),(a+1,b+1,c+1). The per-corner discrete Jacobian
/// J_l is anchored at corner l of this list.
template <int D>
constexpr std::array<std::array<int, D>, corners_per_cell<D>()> corner_offsets();

template <>
constexpr std::array<std::array<int, 2>, 4> corner_offsets<2>() {
    return {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}};
}

template <>
constexpr std::array<std::array<int, 3>, 8> corner_offsets<3>() {
    return {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1},
             {1, 1, 0}, {0, 1, 1}, {1, 0, 1}, {1, 1, 1}}};
}
}  // namespace detail

/// Spatial corner nodes of a cell, in the canonical corner order.
template <int D>
std::array<NodeIndex<D>, detail::corners_per_cell<D>()> cell_nodes(
    const Mesh<D>& mesh, const CellIndex<D>& cell) {
    if (!mesh.cell_valid(cell)) throw std::out_of_range("cell index out of range");
    constexpr auto offs = detail::corner_offsets<D>();
    std::array<NodeIndex<D>, detail::corners_per_cell<D>()> out;
    for (std::size_t k = 0; k < offs.size(); ++k) {
        for (int d = 0; d < D; ++d) out[k][d] = cell[d] + offs[k][d];
    }
    return out;
}

/// All cells containing a node: 1, 2, 4 (or 8 in 3D) depending on how many
/// axes place the node on the boundary.
template <int D>
std::vector<CellIndex<D>> incident_cells(const Mesh<D>& mesh, const NodeIndex<D>& node) {
    if (!mesh.node_valid(node)) throw std::out_of_range("node index out of range");
    std::vector<CellIndex<D>> out;
    out.reserve(detail::corners_per_cell<D>());
    CellIndex<D> c;
    const int lim = 1 << D;
    for (int mask = 0; mask < lim; ++mask) {
        bool ok = true;
        for (int d = 0; d < D; ++d) {
            c[d] = node[d] - ((mask >> d) & 1);
            if (c[d] < 0 || c[d] >= mesh.cells()[d]) { ok = false; break; }
        }
        if (ok) out.push_back(c);
    }
    return out;
}

template <int D>
Vec<D> reference_position(const Mesh<D>& mesh, const NodeIndex<D>& node) {
    if (!mesh.node_valid(node)) throw std::out_of_range("node index out of range");
    return mesh.reference_position(node);
}

}  // namespace symflow

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "symflow/diagnostics.hpp"

namespace symflow {

namespace detail {
inline std::string full_precision(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}
inline std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace detail

inline std::string diagnostics_header(int dimension) {
    return dimension == 2 ? "t,e_kin,e_int,e_pot,e_pen,e_total,j_rot,j_lin_x,j_lin_y"
                          : "t,e_kin,e_int,e_pot,e_pen,e_total,j_rot,j_rot_y,j_rot_z,"
                            "j_lin_x,j_lin_y,j_lin_z";
}

template <int D>
std::string diagnostics_row(const DiagnosticsRecord<D>& r) {
    using detail::full_precision;
    std::string s = full_precision(r.t) + "," + full_precision(r.e_kinetic) + "," +
                    full_precision(r.e_internal) + "," + full_precision(r.e_potential) + "," +
                    full_precision(r.e_penalty) + "," + full_precision(r.e_total);
    if constexpr (D == 2) {
        s += "," + full_precision(r.j_rot);
    } else {
        for (int d = 0; d < 3; ++d) s += "," + full_precision(r.j_rot[d]);
    }
    for (int d = 0; d < D; ++d) s += "," + full_precision(r.j_lin[d]);
    return s;
}

template <int D>
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticsRecord<D>>& series) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot open " + path.string());
    out << diagnostics_header(D) << "\n";
    for (const auto& r : series) out << diagnostics_row<D>(r) << "\n";
}

/// Snapshot rows in lexicographic (a,b[,c]) order, positions in fixed
/// 6-decimal notation.
template <int D>
void write_snapshot_csv(const std::filesystem::path& path, const Configuration<D>& state,
                        const Mesh<D>& mesh) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot open " + path.string());
    out << (D == 2 ? "a,b,x,y" : "a,b,c,x,y,z") << "\n";
    NodeIndex<D> n{};
    const auto npa = mesh.nodes_per_axis();
    while (true) {
        out << n[0];
        for (int d = 1; d < D; ++d) out << "," << n[d];
        const auto& x = state.x[mesh.node_id(n)];
        for (int d = 0; d < D; ++d) out << "," << detail::fixed6(x[d]);
        out << "\n";
        int d = D - 1;
        for (; d >= 0; --d) {
            if (++n[d] < npa[d]) break;
            n[d] = 0;
        }
        if (d < 0) break;
    }
}

inline void write_convergence_csv(const std::filesystem::path& path,
                                  const ConvergenceReport& rep) {
    std::ofstream out(path);
    if (!out) throw SimError("cannot open " + path.string());
    out << "h,error,rate\n";
    for (const auto& row : rep.rows) {
        out << detail::full_precision(row.h) << "," << detail::full_precision(row.error) << ",";
        if (std::isnan(row.rate)) out << "";
        else out << detail::full_precision(row.rate);
        out << "\n";
    }
}

inline std::string format_convergence_table(const ConvergenceReport& rep) {
    std::ostringstream os;
    os << std::left << std::setw(14) << "h" << std::setw(14) << "error" << "rate\n";
    for (const auto& row : rep.rows) {
        os << std::left << std::setw(14) << std::setprecision(6) << row.h << std::setw(14)
           << std::setprecision(6) << row.error;
        if (std::isnan(row.rate)) os << "-";
        else os << std::setprecision(4) << row.rate;
        os << "\n";
    }
    return os.str();
}

}  // namespace symflow

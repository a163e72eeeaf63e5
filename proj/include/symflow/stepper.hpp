#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include <Eigen/LU>

#include "symflow/forces.hpp"

namespace symflow {

/// Per-node lumped mass m_n = M * (incident cells)/4 (2D) or /8 (3D),
/// with M = rho0 * cell measure.
using LumpedMassField = std::vector<double>;

template <int D>
LumpedMassField assemble_lumped_mass(const Mesh<D>& mesh, const MaterialParams& mat) {
    const double share = mat.rho0 * mesh.cell_measure() / detail::corners_per_cell<D>();
    LumpedMassField m(mesh.node_count(), 0.0);
    for (std::int64_t c = 0; c < mesh.cell_count(); ++c) {
        for (const auto& n : cell_nodes(mesh, mesh.cell_from_id(c))) m[mesh.node_id(n)] += share;
    }
    return m;
}

inline int worker_count() {
    if (const char* env = std::getenv("SIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Everything the steppers need besides the states. The mesh must outlive
/// the context.
template <int D>
struct DynamicsContext {
    DynamicsContext(const Mesh<D>& mesh_, MaterialParams mat_, GravitySpec<D> grav_,
                    ConstraintSet<D> constraints_)
        : mesh(&mesh_), mat(mat_), grav(grav_), constraints(std::move(constraints_)),
          mass(assemble_lumped_mass(mesh_, mat_)) {}

    const Mesh<D>* mesh;
    MaterialParams mat;
    GravitySpec<D> grav;
    ConstraintSet<D> constraints;
    LumpedMassField mass;
};

namespace detail {

/// Evaluates per-cell kernels (in parallel when allowed) and scatters them
/// into the nodal array in a fixed cell order, so results are
/// reproducible bit for bit regardless of the worker count.
template <int D, class CellKernel>
void assemble_cells(const Mesh<D>& mesh, std::vector<Vec<D>>& nodal, CellKernel&& kernel) {
    const std::int64_t ncells = mesh.cell_count();
    std::vector<CellForces<D>> buf(ncells);
    const int workers = std::min<std::int64_t>(worker_count(), ncells);
    if (workers <= 1 || ncells < 256) {
        for (std::int64_t c = 0; c < ncells; ++c) buf[c] = kernel(mesh.cell_from_id(c));
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex err_mu;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                const std::int64_t lo = ncells * w / workers;
                const std::int64_t hi = ncells * (w + 1) / workers;
                try {
                    for (std::int64_t c = lo; c < hi; ++c) buf[c] = kernel(mesh.cell_from_id(c));
                } catch (...) {
                    std::lock_guard<std::mutex> g(err_mu);
                    if (!err) err = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    for (std::int64_t c = 0; c < ncells; ++c) {
        const auto nodes = cell_nodes(mesh, mesh.cell_from_id(c));
        for (std::size_t k = 0; k < nodes.size(); ++k)
            nodal[mesh.node_id(nodes[k])] += buf[c].total(static_cast<int>(k));
    }
}

}  // namespace detail

/// Nodal force field of a configuration: cell pressure/penalty/gravity
/// contributions plus per-node contact forces.
template <int D>
std::vector<Vec<D>> assemble_forces(const Configuration<D>& state, const DynamicsContext<D>& ctx) {
    std::vector<Vec<D>> f(ctx.mesh->node_count(), Vec<D>::Zero());
    detail::assemble_cells<D>(*ctx.mesh, f, [&](const CellIndex<D>& cell) {
        return cell_forces_explicit<D>(state, *ctx.mesh, cell, ctx.mat, ctx.grav, ctx.constraints);
    });
    if (!ctx.constraints.contacts.empty()) {
        const double meas = ctx.mesh->cell_measure();
        for (std::int64_t n = 0; n < ctx.mesh->node_count(); ++n)
            f[n] += node_contact_force(ctx.constraints, state.x[n], meas);
    }
    return f;
}

/// One explicit step in velocity form: consumes (phi^j, v^{j-1}) and
/// produces (phi^{j+1}, v^j). Marching with the velocity carried avoids
/// re-deriving it from position differences, which would amplify position
/// roundoff by 1/dt and degrade the conserved momenta over long runs.
template <int D>
void step_explicit_velocity(Configuration<D>& phi, std::vector<Vec<D>>& v, double dt,
                            const DynamicsContext<D>& ctx) {
    const auto f = assemble_forces(phi, ctx);
    for (std::int64_t n = 0; n < ctx.mesh->node_count(); ++n) {
        v[n] += (dt / ctx.mass[n]) * f[n];
        phi.x[n] += dt * v[n];
    }
    phi.time_index += 1;
    if (!phi.finite()) throw NonFinite("explicit step produced non-finite positions");
}

/// One explicit step from a state pair (phi^{j-1}, phi^j) -> phi^{j+1}.
template <int D>
Configuration<D> step_explicit(const StatePair<D>& pair, const DynamicsContext<D>& ctx) {
    Configuration<D> phi = pair.next;
    std::vector<Vec<D>> v(phi.x.size());
    for (std::size_t n = 0; n < v.size(); ++n) v[n] = pair.velocity(static_cast<std::int64_t>(n));
    step_explicit_velocity(phi, v, pair.dt, ctx);
    return phi;
}

enum class JacobianMode { FiniteDifferenceDense, MatrixFreeDirectional };

struct SolverSettings {
    /// Residual bound is tolerance_rel * (rho0 * cell measure) * max(1, typical speed).
    double tolerance_rel = 1e-10;
    int max_iterations = 50;
    JacobianMode jacobian_mode = JacobianMode::FiniteDifferenceDense;
};

namespace detail {

/// Midpoint residual (momentum units) for the unknown next level.
/// R_n = m_n (v^{j-1} - v^j) + dt [f_mid(phi^{j-1},phi^j) + f_mid(phi^j,phi^{j+1})]_n
///       + dt f_contact(phi^j)_n.
template <int D>
class MidpointResidual {
  public:
    MidpointResidual(const StatePair<D>& history, const DynamicsContext<D>& ctx)
        : ctx_(&ctx), prev_(&history.prev), cur_(&history.next), dt_(history.dt),
          base_(ctx.mesh->node_count(), Vec<D>::Zero()) {
        // Contributions independent of the unknown level.
        detail::assemble_cells<D>(*ctx_->mesh, base_, [&](const CellIndex<D>& cell) {
            return cell_forces_midpoint_at(*prev_, *cur_, cell);
        });
        const double meas = ctx_->mesh->cell_measure();
        for (std::int64_t n = 0; n < ctx_->mesh->node_count(); ++n) {
            base_[n] += node_contact_force(ctx_->constraints, cur_->x[n], meas);
            base_[n] *= dt_;
            base_[n] += ctx_->mass[n] * (cur_->x[n] - prev_->x[n]) / dt_;
        }
    }

    Eigen::VectorXd operator()(const Configuration<D>& next) const {
        std::vector<Vec<D>> f(ctx_->mesh->node_count(), Vec<D>::Zero());
        detail::assemble_cells<D>(*ctx_->mesh, f, [&](const CellIndex<D>& cell) {
            return cell_forces_midpoint_at(*cur_, next, cell);
        });
        Eigen::VectorXd R(ctx_->mesh->node_count() * D);
        for (std::int64_t n = 0; n < ctx_->mesh->node_count(); ++n) {
            const Vec<D> r = base_[n] + dt_ * f[n] -
                             ctx_->mass[n] * (next.x[n] - cur_->x[n]) / dt_;
            for (int d = 0; d < D; ++d) R[n * D + d] = r[d];
        }
        return R;
    }

  private:
    CellForces<D> cell_forces_midpoint_at(const Configuration<D>& a, const Configuration<D>& b,
                                          const CellIndex<D>& cell) const {
        auto q = detail::gather_corners(a, *ctx_->mesh, cell);
        const auto qb = detail::gather_corners(b, *ctx_->mesh, cell);
        for (std::size_t k = 0; k < q.p.size(); ++k) q.p[k] = 0.5 * (q.p[k] + qb.p[k]);
        return detail::cell_forces_at<D>(q, *ctx_->mesh, cell, ctx_->mat, ctx_->grav,
                                         ctx_->constraints, 0.5);
    }

    const DynamicsContext<D>* ctx_;
    const Configuration<D>* prev_;
    const Configuration<D>* cur_;
    double dt_;
    std::vector<Vec<D>> base_;
};

/// Nodes colored so that no two same-colored nodes appear in one residual
/// stencil; perturbing a whole color at once yields structurally
/// orthogonal Jacobian columns.
template <int D>
std::vector<std::vector<std::int64_t>> stencil_colors(const Mesh<D>& mesh) {
    const int ncolors = D == 2 ? 9 : 27;
    std::vector<std::vector<std::int64_t>> groups(ncolors);
    for (std::int64_t id = 0; id < mesh.node_count(); ++id) {
        const auto n = mesh.node_from_id(id);
        int color = 0, s = 1;
        for (int d = 0; d < D; ++d) { color += (n[d] % 3) * s; s *= 3; }
        groups[color].push_back(id);
    }
    return groups;
}

template <int D>
Eigen::MatrixXd colored_fd_jacobian(const MidpointResidual<D>& res, Configuration<D>& next,
                                    const Eigen::VectorXd& R0, const Mesh<D>& mesh, double h) {
    const std::int64_t ndof = mesh.node_count() * D;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(ndof, ndof);
    const auto groups = stencil_colors<D>(mesh);
    for (const auto& group : groups) {
        if (group.empty()) continue;
        for (int axis = 0; axis < D; ++axis) {
            for (auto id : group) next.x[id][axis] += h;
            const Eigen::VectorXd Rp = res(next);
            for (auto id : group) next.x[id][axis] -= h;
            for (auto id : group) {
                const auto n = mesh.node_from_id(id);
                // Rows affected by this column: nodes within one lattice step.
                std::array<int, D> lo, hi;
                for (int d = 0; d < D; ++d) {
                    lo[d] = std::max(0, n[d] - 1);
                    hi[d] = std::min(mesh.cells()[d], n[d] + 1);
                }
                NodeIndex<D> m = lo;
                while (true) {
                    const std::int64_t row = mesh.node_id(m);
                    for (int d = 0; d < D; ++d)
                        J(row * D + d, id * D + axis) = (Rp[row * D + d] - R0[row * D + d]) / h;
                    int d = 0;
                    for (; d < D; ++d) {
                        if (m[d] < hi[d]) { ++m[d]; break; }
                        m[d] = lo[d];
                    }
                    if (d == D) break;
                }
            }
        }
    }
    return J;
}

/// Restarted GMRES on a matrix-free operator; returns the approximate
/// solution of A x = b.
inline Eigen::VectorXd gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& A,
                             const Eigen::VectorXd& b, double rel_tol, int restart, int max_outer) {
    const auto n = b.size();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) return x;
    for (int outer = 0; outer < max_outer; ++outer) {
        Eigen::VectorXd r = b - A(x);
        double beta = r.norm();
        if (beta <= rel_tol * bnorm) return x;
        std::vector<Eigen::VectorXd> V;
        V.push_back(r / beta);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(restart + 1, restart);
        Eigen::VectorXd cs = Eigen::VectorXd::Zero(restart), sn = Eigen::VectorXd::Zero(restart);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1);
        g[0] = beta;
        int k = 0;
        for (; k < restart; ++k) {
            Eigen::VectorXd w = A(V[k]);
            for (int i = 0; i <= k; ++i) {
                H(i, k) = w.dot(V[i]);
                w -= H(i, k) * V[i];
            }
            H(k + 1, k) = w.norm();
            if (H(k + 1, k) > 0.0) V.push_back(w / H(k + 1, k));
            for (int i = 0; i < k; ++i) {
                const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
                H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
                H(i, k) = t;
            }
            const double denom = std::hypot(H(k, k), H(k + 1, k));
            cs[k] = H(k, k) / denom;
            sn[k] = H(k + 1, k) / denom;
            H(k, k) = denom;
            H(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            if (std::abs(g[k + 1]) <= rel_tol * bnorm) { ++k; break; }
        }
        Eigen::VectorXd y = Eigen::VectorXd::Zero(k);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
            y[i] = s / H(i, i);
        }
        for (int i = 0; i < k; ++i) x += y[i] * V[i];
    }
    return x;
}

}  // namespace detail

/// Implicit midpoint step: solves the nonlinear balance for phi^{j+1} given
/// the pair (phi^{j-1}, phi^j) with Newton iteration. Throws NoConvergence
/// when the iteration budget is exhausted and NonPositiveJacobian if even
/// the shortest line-search step inverts a cell.
template <int D>
Configuration<D> step_implicit_midpoint(const StatePair<D>& pair, const DynamicsContext<D>& ctx,
                                        const SolverSettings& settings = {}) {
    const Mesh<D>& mesh = *ctx.mesh;
    const double dt = pair.dt;
    detail::MidpointResidual<D> residual(pair, ctx);

    double vtyp = 0.0;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        vtyp = std::max(vtyp, pair.velocity(n).template lpNorm<Eigen::Infinity>());
    const double tol = settings.tolerance_rel * (ctx.mat.rho0 * mesh.cell_measure()) *
                       std::max(1.0, vtyp);

    // Free-flight predictor.
    Configuration<D> next = pair.next;
    next.time_index = pair.next.time_index + 1;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        next.x[n] = pair.next.x[n] + (pair.next.x[n] - pair.prev.x[n]);

    const double h = 1e-7 * *std::min_element(mesh.spacing().begin(), mesh.spacing().end());
    Eigen::VectorXd R = residual(next);
    double rnorm = R.template lpNorm<Eigen::Infinity>();
    for (int it = 0; it < settings.max_iterations; ++it) {
        if (rnorm < tol) return next;
        Eigen::VectorXd dx;
        if (settings.jacobian_mode == JacobianMode::FiniteDifferenceDense) {
            const Eigen::MatrixXd J = detail::colored_fd_jacobian<D>(residual, next, R, mesh, h);
            dx = Eigen::PartialPivLU<Eigen::MatrixXd>(J).solve(-R);
        } else {
            Configuration<D> probe = next;
            auto jvp = [&](const Eigen::VectorXd& u) {
                const double hu = h / std::max(1.0, u.template lpNorm<Eigen::Infinity>());
                for (std::int64_t n = 0; n < mesh.node_count(); ++n)
                    for (int d = 0; d < D; ++d) probe.x[n][d] = next.x[n][d] + hu * u[n * D + d];
                Eigen::VectorXd Ru = residual(probe);
                return Eigen::VectorXd((Ru - R) / hu);
            };
            dx = detail::gmres(jvp, -R, 1e-8, 60, 6);
        }
        if (!dx.allFinite()) throw NonFinite("implicit solve produced a non-finite update");

        double alpha = 1.0;
        bool accepted = false;
        Configuration<D> trial = next;
        while (alpha >= 1.0 / 1024.0) {
            for (std::int64_t n = 0; n < mesh.node_count(); ++n)
                for (int d = 0; d < D; ++d) trial.x[n][d] = next.x[n][d] + alpha * dx[n * D + d];
            try {
                Eigen::VectorXd Rt = residual(trial);
                const double rt = Rt.template lpNorm<Eigen::Infinity>();
                if (rt < rnorm || alpha <= 1.0 / 1024.0) {
                    next.x = trial.x;
                    R.swap(Rt);
                    rnorm = rt;
                    accepted = true;
                    break;
                }
            } catch (const NonPositiveJacobian&) {
                if (alpha <= 1.0 / 1024.0) throw;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }
    if (rnorm < tol) return next;
    throw NoConvergence(rnorm, tol, settings.max_iterations);
}

}  // namespace symflow

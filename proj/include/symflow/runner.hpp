#pragma once

#include <filesystem>
#include <functional>
#include <optional>

#include "symflow/io.hpp"
#include "symflow/scenario.hpp"

namespace symflow {

template <int D>
struct RunResult {
    StatePair<D> final_pair;                    // (phi^{N-1}, phi^N) of the completed run
    std::vector<DiagnosticsRecord<D>> series;
    long steps_completed = 0;
    bool aborted = false;
    std::string abort_reason;
    long abort_step = -1;
};

/// Called after every step with the pair (phi^j, phi^{j+1}) just produced.
template <int D>
using StepObserver = std::function<void(long step, const StatePair<D>&)>;

namespace detail {

template <int D>
class ScenarioRun {
  public:
    ScenarioRun(const ScenarioConfig& cfg, bool write_files)
        : cfg_(cfg), mesh_(cfg.mesh<D>()),
          ctx_(mesh_, cfg.material(), cfg.gravity<D>(), cfg.constraint_set<D>()),
          write_(write_files) {}

    RunResult<D> run(const StepObserver<D>& observer) {
        auto [phi0, v0] = build_initial_state<D>(cfg_, mesh_);
        const double dt = cfg_.dt;
        if (write_) std::filesystem::create_directories(cfg_.output.directory);

        RunResult<D> result;
        Configuration<D> prev = phi0;            // phi^{j-1}; starts as phi^{-1}
        Configuration<D> cur = phi0;             // phi^j
        std::vector<Vec<D>> vel = v0;            // velocity entering the next step
        for (std::int64_t n = 0; n < mesh_.node_count(); ++n) prev.x[n] -= dt * v0[n];
        prev.time_index = -1;

        sample(result, 0, cur, vel, dt);
        snapshot(cur, 0);
        const bool implicit = cfg_.integrator.kind == IntegratorKind::ImplicitMidpoint;
        for (long step = 1; step <= cfg_.steps; ++step) {
            try {
                if (implicit) {
                    StatePair<D> pair{prev, cur, dt};
                    Configuration<D> next = step_implicit_midpoint<D>(pair, ctx_, cfg_.integrator.solver);
                    prev = std::move(cur);
                    cur = std::move(next);
                    for (std::int64_t n = 0; n < mesh_.node_count(); ++n)
                        vel[n] = (cur.x[n] - prev.x[n]) / dt;
                } else {
                    prev = cur;
                    step_explicit_velocity<D>(cur, vel, dt, ctx_);
                }
            } catch (const SimError& err) {
                result.aborted = true;
                result.abort_reason = err.what();
                result.abort_step = step;
                break;
            }
            result.steps_completed = step;
            if (observer) observer(step, StatePair<D>{prev, cur, dt});
            if (step % cfg_.output.diagnostics_stride == 0 || step == cfg_.steps)
                result.series.push_back(
                    total_energy<D>(StatePair<D>{prev, cur, dt}, mesh_, ctx_.mat, ctx_.grav,
                                    ctx_.constraints));
            if (step % cfg_.output.snapshot_stride == 0 || step == cfg_.steps) snapshot(cur, step);
        }
        result.final_pair = StatePair<D>{std::move(prev), std::move(cur), dt};
        if (write_) {
            write_diagnostics_csv<D>(
                std::filesystem::path(cfg_.output.directory) / "diagnostics.csv", result.series);
            if (result.aborted) {
                std::ofstream out(std::filesystem::path(cfg_.output.directory) / "aborted.txt");
                out << "step " << result.abort_step << ": " << result.abort_reason << "\n";
            }
        }
        return result;
    }

  private:
    void sample(RunResult<D>& result, long /*step*/, const Configuration<D>& cur,
                const std::vector<Vec<D>>& vel, double dt) {
        Configuration<D> next = cur;
        for (std::int64_t n = 0; n < mesh_.node_count(); ++n) next.x[n] += dt * vel[n];
        next.time_index = cur.time_index + 1;
        result.series.push_back(total_energy<D>(StatePair<D>{cur, next, dt}, mesh_, ctx_.mat,
                                                ctx_.grav, ctx_.constraints));
    }

    void snapshot(const Configuration<D>& cur, long step) {
        if (!write_) return;
        write_snapshot_csv<D>(std::filesystem::path(cfg_.output.directory) /
                                  ("snap_" + std::to_string(step) + ".csv"),
                              cur, mesh_);
    }

    ScenarioConfig cfg_;
    Mesh<D> mesh_;
    DynamicsContext<D> ctx_;
    bool write_;
};

}  // namespace detail

/// Executes a scenario: N steps from the bootstrapped pair
/// phi^{-1} = phi^0 - dt v^0, sampling diagnostics and snapshots at the
/// configured strides. Step failures abort cleanly with the failing step
/// recorded in the result.
template <int D>
RunResult<D> run_scenario(const ScenarioConfig& cfg, bool write_files = true,
                          const StepObserver<D>& observer = {}) {
    cfg.validate();
    if (cfg.dimension != D) throw ConfigError("scenario dimension mismatch");
    return detail::ScenarioRun<D>(cfg, write_files).run(observer);
}

enum class StudyAxis { Time, Space };

struct StudySpec {
    StudyAxis axis = StudyAxis::Time;
    std::vector<double> levels;   // strictly halving dt or ds values
    double reference = 0.0;       // finer than every level
    double end_time = 0.0;        // comparison time
};

namespace detail {

template <int D>
Configuration<D> study_final_state(ScenarioConfig cfg, double end_time) {
    const long steps = std::lround(end_time / cfg.dt);
    if (std::abs(steps * cfg.dt - end_time) > 1e-9 * end_time)
        throw ConfigError("study end time is not a multiple of dt");
    cfg.steps = steps;
    cfg.output.diagnostics_stride = steps;  // keep sampling minimal
    cfg.output.snapshot_stride = steps;
    auto result = run_scenario<D>(cfg, false);
    if (result.aborted)
        throw SimError("study level aborted at step " + std::to_string(result.abort_step) + ": " +
                       result.abort_reason);
    return result.final_pair.next;
}

template <int D>
ScenarioConfig with_spacing(const ScenarioConfig& base, double h) {
    ScenarioConfig cfg = base;
    for (int d = 0; d < D; ++d) {
        const double extent = base.domain_extent(d);
        const long cells = std::lround(extent / h);
        if (cells < 1 || std::abs(cells * h - extent) > 1e-9 * extent)
            throw ConfigError("domain extent is not a multiple of the level spacing");
        cfg.cells[d] = static_cast<int>(cells);
        cfg.spacing[d] = extent / static_cast<double>(cells);
    }
    return cfg;
}

}  // namespace detail

/// Runs every level plus the reference and reports L2 errors at the
/// comparison time together with halving rates. Space levels rebuild the
/// mesh; the boundary-velocity initial condition regenerates per level,
/// which keeps the total initial momentum resolution-independent.
template <int D>
ConvergenceReport run_convergence_study(const ScenarioConfig& base, const StudySpec& spec) {
    if (spec.levels.empty()) throw ConfigError("study needs at least one level");
    for (std::size_t i = 1; i < spec.levels.size(); ++i)
        if (std::abs(spec.levels[i - 1] / spec.levels[i] - 2.0) > 1e-9)
            throw ConfigError("study levels must halve");
    if (!(spec.reference < spec.levels.back()))
        throw ConfigError("study reference must be finer than every level");

    Configuration<D> ref;
    if (spec.axis == StudyAxis::Time) {
        ScenarioConfig cfg = base;
        cfg.dt = spec.reference;
        ref = detail::study_final_state<D>(cfg, spec.end_time);
    } else {
        ref = detail::study_final_state<D>(detail::with_spacing<D>(base, spec.reference),
                                           spec.end_time);
    }

    std::vector<std::pair<double, double>> errors;
    for (double h : spec.levels) {
        ScenarioConfig cfg = base;
        if (spec.axis == StudyAxis::Time) cfg.dt = h;
        else cfg = detail::with_spacing<D>(base, h);
        const Configuration<D> sol = detail::study_final_state<D>(cfg, spec.end_time);
        errors.emplace_back(h, l2_error<D>(sol, ref));
    }
    return convergence_rates(errors);
}

}  // namespace symflow

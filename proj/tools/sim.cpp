#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "symflow/symflow.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitRuntimeError = 3;

template <int D>
int run_dispatch(symflow::ScenarioConfig cfg) {
    using namespace symflow;
    const auto result = run_scenario<D>(cfg);
    std::cout << "scenario '" << cfg.name << "': " << result.steps_completed << "/" << cfg.steps
              << " steps";
    if (!result.series.empty()) {
        const auto& last = result.series.back();
        std::cout << ", t=" << last.t << ", E=" << last.e_total;
    }
    std::cout << "\noutputs in " << cfg.output.directory << "\n";
    if (result.aborted) {
        std::cerr << "aborted at step " << result.abort_step << ": " << result.abort_reason
                  << "\n";
        return kExitRuntimeError;
    }
    return 0;
}

int cmd_run(const std::string& source, const std::string& out_dir, long steps_override,
            double dt_override) {
    symflow::ScenarioConfig cfg = symflow::parse_config(source);
    if (!out_dir.empty()) cfg.output.directory = out_dir;
    if (steps_override > 0) cfg.steps = steps_override;
    if (dt_override > 0) cfg.dt = dt_override;
    cfg.validate();
    return cfg.dimension == 2 ? run_dispatch<2>(cfg) : run_dispatch<3>(cfg);
}

int cmd_converge(const std::string& name, const std::string& axis_name, int levels,
                 const std::string& out_csv) {
    using namespace symflow;
    const auto cfg = parse_config(name);
    const StudyAxis axis = axis_name == "space" ? StudyAxis::Space : StudyAxis::Time;
    StudySpec spec = default_study(cfg.name, axis);
    if (levels > 0 && levels < static_cast<int>(spec.levels.size()))
        spec.levels.resize(levels);
    const ConvergenceReport rep = cfg.dimension == 2
                                      ? run_convergence_study<2>(cfg, spec)
                                      : run_convergence_study<3>(cfg, spec);
    std::cout << format_convergence_table(rep);
    if (!out_csv.empty()) {
        write_convergence_csv(out_csv, rep);
        std::cout << "report written to " << out_csv << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Lagrangian barotropic/incompressible fluid integrator"};
    app.require_subcommand(1);

    std::string source, out_dir, axis = "time", out_csv;
    long steps = 0;
    double dt = 0.0;
    int levels = 0;

    auto* run = app.add_subcommand("run", "run a scenario config file or builtin");
    run->add_option("config", source, "config path or builtin name")->required();
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--steps", steps, "step count override");
    run->add_option("--dt", dt, "time step override");

    auto* conv = app.add_subcommand("converge", "run a refinement study on a builtin");
    conv->add_option("builtin", source, "study builtin (conv2d-free, conv3d-surface)")->required();
    conv->add_option("--axis", axis, "time or space")->check(CLI::IsMember({"time", "space"}));
    conv->add_option("--levels", levels, "number of refinement levels");
    conv->add_option("--out", out_csv, "CSV report path");

    auto* list = app.add_subcommand("list", "list builtin scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? kExitConfigError : 0;
    }

    try {
        if (list->parsed()) {
            for (const auto& [name, factory] : symflow::builtin_registry()) {
                const auto cfg = factory();
                std::printf("%-28s %dD %ldx steps, dt=%g\n", name.c_str(), cfg.dimension,
                            cfg.steps, cfg.dt);
            }
            return 0;
        }
        if (run->parsed()) return cmd_run(source, out_dir, steps, dt);
        if (conv->parsed()) return cmd_converge(source, axis, levels, out_csv);
    } catch (const symflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const symflow::SimError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return 0;
}

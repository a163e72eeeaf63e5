#pragma once

#include <fstream>
#include <map>

#include <json.hpp>

#include "symflow/runner.hpp"
#include "symflow/scenario.hpp"

namespace symflow {

namespace builtin_detail {

inline ScenarioConfig base_water(int dimension) {
    ScenarioConfig cfg;
    cfg.dimension = dimension;
    cfg.rho0 = 997.0;
    cfg.gamma = 6.0;
    cfg.a_tilde = 3.041e4;
    cfg.b_coeff = 3.0397e4;
    return cfg;
}

/// Paired compression kick: the two nodes move toward each other along the
/// line joining them by `scale` * (min spacing) each, applied at t^1.
inline std::vector<NodeDisplacement> paired_pinch(const ScenarioConfig& cfg,
                                                  const std::vector<int>& n1,
                                                  const std::vector<int>& n2, double scale) {
    const int dim = cfg.dimension;
    std::vector<double> dir(dim), ref1(dim), ref2(dim);
    double norm = 0.0;
    for (int d = 0; d < dim; ++d) {
        ref1[d] = n1[d] * cfg.spacing[d];
        ref2[d] = n2[d] * cfg.spacing[d];
        dir[d] = ref2[d] - ref1[d];
        norm += dir[d] * dir[d];
    }
    norm = std::sqrt(norm);
    double ds_min = cfg.spacing[0];
    for (double s : cfg.spacing) ds_min = std::min(ds_min, s);
    std::vector<NodeDisplacement> out(2);
    out[0].node = n1;
    out[1].node = n2;
    out[0].displacement.resize(dim);
    out[1].displacement.resize(dim);
    for (int d = 0; d < dim; ++d) {
        const double u = dir[d] / norm * scale * ds_min;
        out[0].displacement[d] = u;
        out[1].displacement[d] = -u;
    }
    return out;
}

inline ScenarioConfig example1(double r, double dt, long steps, const std::string& name) {
    ScenarioConfig cfg = base_water(2);
    cfg.name = name;
    cfg.cells = {14, 14};
    cfg.spacing = {1.0 / 14.0, 1.0 / 14.0};
    cfg.penalty_r = r;
    cfg.dt = dt;
    cfg.steps = steps;
    cfg.initial = paired_pinch(cfg, {4, 0}, {5, 1}, 0.01);
    return cfg;
}

inline ScenarioConfig example2(double r, const std::string& name) {
    ScenarioConfig cfg = base_water(2);
    cfg.name = name;
    cfg.cells = {32, 12};
    cfg.spacing = {0.0625, 0.4 / 12.0};
    cfg.gravity_enabled = true;
    cfg.penalty_r = r;
    cfg.dt = 1e-4;
    cfg.steps = 20000;
    ContactSpec floor;
    floor.kind = "half_space";
    floor.normal = {0.0, 1.0};
    floor.offset = 0.0;
    floor.stiffness = 4.8e10;
    ContactSpec box;
    box.kind = "box";
    box.lo = {2.5, 0.0};
    box.hi = {3.0, 0.3};
    box.stiffness = 4.8e6;
    cfg.contacts = {floor, box};
    return cfg;
}

inline ScenarioConfig conv2d_free() {
    ScenarioConfig cfg = base_water(2);
    cfg.name = "conv2d-free";
    cfg.cells = {7, 7};
    cfg.spacing = {0.4 / 7.0, 0.4 / 7.0};
    cfg.dt = 5e-3;
    cfg.steps = 50;
    cfg.integrator.kind = IntegratorKind::ImplicitMidpoint;
    BoundaryVelocityProfile bvp;
    bvp.edge = "b_min";
    bvp.per_index = {0.0, 0.163};
    cfg.initial = bvp;
    return cfg;
}

inline ScenarioConfig example3(double r, const std::string& name) {
    ScenarioConfig cfg = base_water(3);
    cfg.name = name;
    cfg.cells = {6, 6, 6};
    cfg.spacing = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    cfg.penalty_r = r;
    cfg.dt = 1e-3;
    cfg.steps = 2000;
    cfg.initial = paired_pinch(cfg, {1, 0, 1}, {1, 0, 2}, 0.01);
    return cfg;
}

inline ScenarioConfig example4(double r, const std::string& name) {
    ScenarioConfig cfg = base_water(3);
    cfg.name = name;
    cfg.gamma = 7.0;
    cfg.cells = {16, 5, 4};
    cfg.spacing = {0.1, 0.2, 0.1};
    cfg.gravity_enabled = true;
    cfg.penalty_r = r;
    cfg.dt = 5e-5;
    cfg.steps = 28000;
    ContactSpec floor;
    floor.kind = "half_space";
    floor.normal = {0.0, 0.0, 1.0};
    floor.offset = 0.0;
    floor.stiffness = 5e9;
    ContactSpec box;
    box.kind = "box";
    box.lo = {2.1, -1.0, 0.0};
    box.hi = {2.6, 2.0, 0.3};
    box.stiffness = 5e9;
    cfg.contacts = {floor, box};
    return cfg;
}

inline ScenarioConfig conv3d_surface() {
    ScenarioConfig cfg = base_water(3);
    cfg.name = "conv3d-surface";
    cfg.cells = {4, 4, 4};
    cfg.spacing = {0.1, 0.1, 0.1};
    cfg.gravity_enabled = true;
    cfg.dt = 2.5e-4;
    cfg.steps = 2000;
    ContactSpec floor;
    floor.kind = "half_space";
    floor.normal = {0.0, 0.0, 1.0};
    floor.offset = 0.0;
    floor.stiffness = 3e7;
    cfg.contacts = {floor};
    return cfg;
}

}  // namespace builtin_detail

inline const std::map<std::string, ScenarioConfig (*)()>& builtin_registry() {
    static const std::map<std::string, ScenarioConfig (*)()> reg = {
        {"example1-baro",
         [] { return builtin_detail::example1(0.0, 1e-3, 6000, "example1-baro"); }},
        {"example1-incomp-r1e6",
         [] { return builtin_detail::example1(1e6, 1e-3, 6000, "example1-incomp-r1e6"); }},
        {"example1-incomp-r1e7",
         [] { return builtin_detail::example1(1e7, 5e-4, 12000, "example1-incomp-r1e7"); }},
        {"example2-impact", [] { return builtin_detail::example2(0.0, "example2-impact"); }},
        {"example2-impact-incomp",
         [] { return builtin_detail::example2(5e8, "example2-impact-incomp"); }},
        {"conv2d-free", [] { return builtin_detail::conv2d_free(); }},
        {"example3-baro", [] { return builtin_detail::example3(0.0, "example3-baro"); }},
        {"example3-incomp-r1e5",
         [] { return builtin_detail::example3(1e5, "example3-incomp-r1e5"); }},
        {"example3-incomp-r1e7",
         [] { return builtin_detail::example3(1e7, "example3-incomp-r1e7"); }},
        {"example4-impact", [] { return builtin_detail::example4(0.0, "example4-impact"); }},
        {"example4-impact-incomp-r1e8",
         [] { return builtin_detail::example4(1e8, "example4-impact-incomp-r1e8"); }},
        {"conv3d-surface", [] { return builtin_detail::conv3d_surface(); }},
    };
    return reg;
}

inline std::optional<ScenarioConfig> find_builtin(const std::string& name) {
    const auto& reg = builtin_registry();
    const auto it = reg.find(name);
    if (it == reg.end()) return std::nullopt;
    return it->second();
}

/// Pinned refinement protocols for the convergence-study builtins.
inline StudySpec default_study(const std::string& builtin_name, StudyAxis axis) {
    StudySpec spec;
    spec.axis = axis;
    if (builtin_name == "conv2d-free") {
        if (axis == StudyAxis::Time) {
            spec.levels = {5e-3, 2.5e-3, 1.25e-3, 6.25e-4};
            spec.reference = 3.125e-4;
            spec.end_time = 0.25;
        } else {
            spec.levels = {0.4, 0.2, 0.1, 0.05};
            spec.reference = 0.025;
            spec.end_time = 0.1;
        }
        return spec;
    }
    if (builtin_name == "conv3d-surface") {
        if (axis == StudyAxis::Time) {
            spec.levels = {2.5e-4, 1.25e-4, 6.25e-5, 3.125e-5};
            spec.reference = 7.8125e-6;
            spec.end_time = 0.5;
        } else {
            spec.levels = {0.2, 0.1, 0.05, 0.025};
            spec.reference = 0.0125;
            spec.end_time = 0.1;
        }
        return spec;
    }
    throw ConfigError("no study protocol for builtin '" + builtin_name + "'");
}

namespace detail {

template <class T>
T get_or(const nlohmann::json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    return j.at(key).get<T>();
}

inline InitialCondition parse_initial(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "at_rest") return AtRest{};
    if (kind == "node_displacements") {
        std::vector<NodeDisplacement> items;
        for (const auto& e : j.at("items")) {
            NodeDisplacement nd;
            nd.node = e.at("node").get<std::vector<int>>();
            nd.displacement = e.at("displacement").get<std::vector<double>>();
            items.push_back(std::move(nd));
        }
        return items;
    }
    if (kind == "boundary_velocity") {
        BoundaryVelocityProfile bvp;
        bvp.edge = j.at("edge").get<std::string>();
        bvp.per_index = j.at("velocity_per_index").get<std::vector<double>>();
        return bvp;
    }
    throw ConfigError("unknown initial-condition kind '" + kind + "'");
}

}  // namespace detail

/// Parses a scenario document. Builtin names bypass file parsing.
inline ScenarioConfig parse_config(const std::string& path_or_builtin) {
    if (auto builtin = find_builtin(path_or_builtin)) return *builtin;

    std::ifstream in(path_or_builtin);
    if (!in) throw ConfigError("cannot open config '" + path_or_builtin + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw ConfigError(std::string("config parse error: ") + err.what());
    }

    ScenarioConfig cfg;
    try {
        cfg.name = detail::get_or<std::string>(j, "name", "custom");
        cfg.dimension = j.at("dimension").get<int>();
        const auto& mesh = j.at("mesh");
        cfg.cells = mesh.at("cells").get<std::vector<int>>();
        if (mesh.contains("spacing")) {
            cfg.spacing = mesh.at("spacing").get<std::vector<double>>();
        } else if (mesh.contains("extent")) {
            const auto extent = mesh.at("extent").get<std::vector<double>>();
            if (extent.size() != cfg.cells.size())
                throw ConfigError("mesh extent must match cells");
            cfg.spacing.resize(extent.size());
            for (std::size_t d = 0; d < extent.size(); ++d)
                cfg.spacing[d] = extent[d] / cfg.cells[d];
        } else {
            throw ConfigError("mesh needs spacing or extent");
        }
        const auto& material = j.at("material");
        cfg.rho0 = material.at("rho0").get<double>();
        cfg.gamma = material.at("gamma").get<double>();
        if (material.contains("A_tilde")) cfg.a_tilde = material.at("A_tilde").get<double>();
        if (material.contains("A")) cfg.a_coeff = material.at("A").get<double>();
        cfg.b_coeff = detail::get_or<double>(material, "B", 0.0);
        if (j.contains("gravity")) {
            const auto& g = j.at("gravity");
            cfg.gravity_enabled = detail::get_or<bool>(g, "enabled", true);
            if (g.contains("vector")) cfg.gravity_vector = g.at("vector").get<std::vector<double>>();
        }
        if (j.contains("constraints")) {
            const auto& c = j.at("constraints");
            cfg.penalty_r = detail::get_or<double>(c, "incompressibility_r", 0.0);
            if (c.contains("contacts")) {
                for (const auto& e : c.at("contacts")) {
                    ContactSpec spec;
                    spec.kind = e.at("kind").get<std::string>();
                    spec.stiffness = e.at("stiffness").get<double>();
                    if (spec.kind == "half_space") {
                        spec.normal = e.at("normal").get<std::vector<double>>();
                        spec.offset = detail::get_or<double>(e, "offset", 0.0);
                    } else {
                        spec.lo = e.at("min").get<std::vector<double>>();
                        spec.hi = e.at("max").get<std::vector<double>>();
                    }
                    cfg.contacts.push_back(std::move(spec));
                }
            }
        }
        cfg.dt = j.at("dt").get<double>();
        cfg.steps = j.at("steps").get<long>();
        if (j.contains("integrator")) {
            const auto& integ = j.at("integrator");
            const std::string kind = detail::get_or<std::string>(integ, "kind", "explicit");
            if (kind == "explicit") cfg.integrator.kind = IntegratorKind::Explicit;
            else if (kind == "midpoint") cfg.integrator.kind = IntegratorKind::ImplicitMidpoint;
            else throw ConfigError("integrator kind must be explicit or midpoint");
            cfg.integrator.solver.tolerance_rel =
                detail::get_or<double>(integ, "tolerance", 1e-10);
            cfg.integrator.solver.max_iterations = detail::get_or<int>(integ, "max_iterations", 50);
            const std::string mode =
                detail::get_or<std::string>(integ, "jacobian_mode", "fd-dense");
            if (mode == "fd-dense")
                cfg.integrator.solver.jacobian_mode = JacobianMode::FiniteDifferenceDense;
            else if (mode == "matrix-free")
                cfg.integrator.solver.jacobian_mode = JacobianMode::MatrixFreeDirectional;
            else throw ConfigError("jacobian_mode must be fd-dense or matrix-free");
        }
        if (j.contains("initial")) cfg.initial = detail::parse_initial(j.at("initial"));
        if (j.contains("output")) {
            const auto& o = j.at("output");
            cfg.output.directory = detail::get_or<std::string>(o, "directory", "out");
            cfg.output.snapshot_stride = detail::get_or<int>(o, "snapshot_stride", 100);
            cfg.output.diagnostics_stride = detail::get_or<int>(o, "diagnostics_stride", 10);
        }
    } catch (const nlohmann::json::exception& err) {
        throw ConfigError(std::string("config field error: ") + err.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace symflow

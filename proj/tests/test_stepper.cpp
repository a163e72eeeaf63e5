#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "symflow/stepper.hpp"

using namespace symflow;

namespace {
const MaterialParams kWater = MaterialParams::from_a_tilde(997.0, 6.0, 3.041e4, 3.0397e4);
const MaterialParams kZero = MaterialParams::from_a(997.0, 6.0, 0.0, 0.0);
}

TEST_CASE("lumped mass distribution") {
    Mesh2D one({1, 1}, {0.2, 0.3});
    const double M = 997.0 * 0.2 * 0.3;
    auto m = assemble_lumped_mass(one, kWater);
    for (double v : m) CHECK(v == doctest::Approx(M / 4).epsilon(1e-14));

    Mesh2D four({2, 2}, {0.2, 0.3});
    m = assemble_lumped_mass(four, kWater);
    CHECK(m[four.node_id({1, 1})] == doctest::Approx(M).epsilon(1e-14));

    double total = 0.0;
    for (double v : m) total += v;
    CHECK(total == doctest::Approx(997.0 * 0.4 * 0.6).epsilon(1e-13));

    Mesh3D cube({2, 3, 2}, {0.1, 0.1, 0.2});
    auto m3 = assemble_lumped_mass(cube, kWater);
    const double M3 = 997.0 * 0.1 * 0.1 * 0.2;
    CHECK(m3[cube.node_id({0, 0, 0})] == doctest::Approx(M3 / 8).epsilon(1e-13));
    CHECK(m3[cube.node_id({1, 1, 1})] == doctest::Approx(M3).epsilon(1e-13));
    total = 0.0;
    for (double v : m3) total += v;
    CHECK(total == doctest::Approx(997.0 * 0.2 * 0.3 * 0.4).epsilon(1e-12));
}

TEST_CASE("explicit step: free flight is exact") {
    Mesh2D mesh({3, 3}, {0.1, 0.1});
    DynamicsContext<2> ctx(mesh, kZero, {}, {});
    const double dt = 1e-3;
    const Vec2 c(0.7, -0.4);
    Configuration<2> prev = reference_configuration(mesh);
    Configuration<2> next = prev;
    for (auto& x : next.x) x += dt * c;
    const auto out = step_explicit<2>(StatePair<2>{prev, next, dt}, ctx);
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        CHECK((out.x[n] - (next.x[n] + dt * c)).norm() == 0.0);
}

TEST_CASE("explicit step: gravity-only gives dv = -g dt at every node") {
    Mesh2D mesh({3, 2}, {0.1, 0.1});
    GravitySpec<2> g;
    g.g = Vec2(0.0, -9.81);
    DynamicsContext<2> ctx(mesh, kZero, g, {});
    const double dt = 1e-3;
    Configuration<2> prev = reference_configuration(mesh);
    Configuration<2> next = prev;  // at rest
    const auto out = step_explicit<2>(StatePair<2>{prev, next, dt}, ctx);
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) {
        const Vec2 v = (out.x[n] - next.x[n]) / dt;
        CHECK(v.x() == 0.0);
        CHECK(v.y() == doctest::Approx(-9.81 * dt).epsilon(1e-13));
    }
}

TEST_CASE("explicit stepper reproduces the interior discrete balance") {
    // Assemble M v^{j-1} + A + B_{a-1,b} + C_{a,b-1} + D_{a-1,b-1} = 0 from
    // the per-cell forces directly and compare with step_explicit.
    std::mt19937 rng(3);
    Mesh2D mesh({4, 4}, {0.09, 0.11});
    ConstraintSet<2> cs;
    cs.incompressibility.r = 2e5;
    GravitySpec<2> g;
    g.g = Vec2(0.1, -9.81);
    DynamicsContext<2> ctx(mesh, kWater, g, cs);
    const double dt = 2e-4;
    const auto prev = oracle::random_admissible<2>(mesh, rng);
    Configuration<2> next = prev;
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& x : next.x) x += dt * Vec2(0.3 * uni(rng), 0.3 * uni(rng));
    const StatePair<2> pair{prev, next, dt};
    const auto out = step_explicit<2>(pair, ctx);

    const double M = kWater.rho0 * mesh.cell_measure();
    for (int a = 1; a < 4; ++a) {
        for (int b = 1; b < 4; ++b) {
            const NodeIndex<2> node{a, b};
            const std::int64_t id = mesh.node_id(node);
            Vec2 force_sum = Vec2::Zero();
            const std::array<std::pair<CellIndex<2>, int>, 4> terms = {{
                {{a, b}, 0}, {{a - 1, b}, 1}, {{a, b - 1}, 2}, {{a - 1, b - 1}, 3}}};
            for (const auto& [cell, corner] : terms) {
                const auto f = cell_forces_explicit_2d(next, mesh, cell, kWater, g, cs);
                force_sum += f.total(corner);
            }
            const Vec2 v_new = pair.velocity(id) + dt * force_sum / M;
            const Vec2 expected = next.x[id] + dt * v_new;
            CHECK((out.x[id] - expected).norm() <= 1e-13 * (expected.norm() + 1.0));
        }
    }
}

TEST_CASE("short free run conserves the momentum maps") {
    Mesh2D mesh({6, 6}, {1.0 / 6.0, 1.0 / 6.0});
    DynamicsContext<2> ctx(mesh, kWater, {}, {});
    const double dt = 5e-4;
    Configuration<2> phi = reference_configuration(mesh);
    std::vector<Vec2> v(mesh.node_count(), Vec2::Zero());
    v[mesh.node_id({2, 0})] = Vec2(0.5, 0.5);
    v[mesh.node_id({3, 1})] = Vec2(-0.5, -0.5);

    Configuration<2> next0 = phi;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) next0.x[n] += dt * v[n];
    const auto [jr0, jl0] = momentum_map_2d(StatePair<2>{phi, next0, dt}, mesh, kWater);

    for (int step = 0; step < 200; ++step) step_explicit_velocity<2>(phi, v, dt, ctx);
    Configuration<2> prev = phi;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n) prev.x[n] -= dt * v[n];
    const auto [jr, jl] = momentum_map_2d(StatePair<2>{prev, phi, dt}, mesh, kWater);
    CHECK(std::abs(jr - jr0) <= 1e-12 * std::max(1.0, std::abs(jr0)));
    CHECK((jl - jl0).norm() <= 1e-12 * std::max(1.0, jl0.norm()));
}

TEST_CASE("implicit midpoint: zero forces solve in one iteration") {
    Mesh2D mesh({2, 2}, {0.1, 0.1});
    DynamicsContext<2> ctx(mesh, kZero, {}, {});
    const double dt = 1e-3;
    Configuration<2> prev = reference_configuration(mesh);
    Configuration<2> next = prev;
    const Vec2 c(0.3, 0.1);
    for (auto& x : next.x) x += dt * c;
    const auto out = step_implicit_midpoint<2>(StatePair<2>{prev, next, dt}, ctx);
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        CHECK((out.x[n] - (next.x[n] + dt * c)).norm() <= 1e-14);
}

TEST_CASE("implicit midpoint satisfies its residual tolerance") {
    std::mt19937 rng(5);
    Mesh2D mesh({3, 3}, {0.4 / 3, 0.4 / 3});
    ConstraintSet<2> cs;
    cs.incompressibility.r = 1e5;
    DynamicsContext<2> ctx(mesh, kWater, {}, cs);
    const double dt = 1e-3;
    const auto prev = oracle::random_admissible<2>(mesh, rng, 0.9, 1.15, 0.03);
    Configuration<2> next = prev;
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& x : next.x) x += dt * Vec2(0.2 * uni(rng), 0.2 * uni(rng));
    const StatePair<2> pair{prev, next, dt};

    SolverSettings settings;
    const auto out = step_implicit_midpoint<2>(pair, ctx, settings);
    const detail::MidpointResidual<2> residual(pair, ctx);
    const double M = kWater.rho0 * mesh.cell_measure();
    double vtyp = 0.0;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        vtyp = std::max(vtyp, pair.velocity(n).lpNorm<Eigen::Infinity>());
    CHECK(residual(out).lpNorm<Eigen::Infinity>() <
          settings.tolerance_rel * M * std::max(1.0, vtyp));

    // matrix-free mode reaches the same solution
    SolverSettings mf;
    mf.jacobian_mode = JacobianMode::MatrixFreeDirectional;
    const auto out_mf = step_implicit_midpoint<2>(pair, ctx, mf);
    double diff = 0.0;
    for (std::int64_t n = 0; n < mesh.node_count(); ++n)
        diff = std::max(diff, (out.x[n] - out_mf.x[n]).norm());
    CHECK(diff < 1e-8);
}

TEST_CASE("explicit and midpoint trajectories approach each other under refinement") {
    // Both integrators are time-symmetric two-step schemes, so their gap at
    // a fixed time shrinks at second order: halving dt quarters the gap.
    Mesh2D mesh({4, 4}, {0.1, 0.1});
    DynamicsContext<2> ctx(mesh, kWater, {}, {});
    const double T = 0.02;
    auto gap_at = [&](double dt) {
        const long steps = std::lround(T / dt);
        Configuration<2> phi = reference_configuration(mesh);
        std::vector<Vec2> v(mesh.node_count(), Vec2::Zero());
        for (int a = 0; a <= 4; ++a) v[mesh.node_id({a, 0})] = Vec2(0.0, 0.163 * a);
        Configuration<2> prev = phi;
        for (std::int64_t n = 0; n < mesh.node_count(); ++n) prev.x[n] -= dt * v[n];
        Configuration<2> e_phi = phi;
        std::vector<Vec2> e_v = v;
        for (long s = 0; s < steps; ++s) step_explicit_velocity<2>(e_phi, e_v, dt, ctx);
        Configuration<2> a = prev, b = phi;
        for (long s = 0; s < steps; ++s) {
            auto c = step_implicit_midpoint<2>(StatePair<2>{a, b, dt}, ctx);
            a = std::move(b);
            b = std::move(c);
        }
        double gap = 0.0;
        for (std::int64_t n = 0; n < mesh.node_count(); ++n)
            gap += (e_phi.x[n] - b.x[n]).squaredNorm();
        return std::sqrt(gap);
    };
    const double g1 = gap_at(1e-3), g2 = gap_at(5e-4);
    CHECK(g2 < g1);
    const double ratio = g1 / g2;
    CHECK(ratio > 2.5);
    CHECK(ratio < 6.0);
}

TEST_CASE("implicit midpoint reports no convergence") {
    Mesh2D mesh({2, 2}, {0.1, 0.1});
    DynamicsContext<2> ctx(mesh, kWater, {}, {});
    SolverSettings strangled;
    strangled.max_iterations = 1;
    strangled.tolerance_rel = 1e-16;
    Configuration<2> prev = reference_configuration(mesh);
    Configuration<2> next = prev;
    for (auto& x : next.x) x += Vec2(1e-3, -2e-3);
    CHECK_THROWS_AS(
        step_implicit_midpoint<2>(StatePair<2>{prev, next, 1e-3}, ctx, strangled),
        NoConvergence);
}

#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "symflow/kinematics.hpp"

using namespace symflow;

namespace {

Configuration<2> mapped(const Mesh2D& mesh, const Mat2& linear, const Vec2& shift = Vec2::Zero()) {
    Configuration<2> c = reference_configuration(mesh);
    for (auto& x : c.x) x = linear * x + shift;
    return c;
}

}  // namespace

TEST_CASE("edge vectors: identity, dilation, rotation") {
    Mesh2D mesh({3, 3}, {0.25, 0.5});
    const auto id = mapped(mesh, Mat2::Identity());
    auto ev = edge_vectors_2d(id, mesh, {1, 1});
    CHECK(ev.col[0][0] == Vec2(1, 0));
    CHECK(ev.col[0][1] == Vec2(0, 1));

    const auto dil = mapped(mesh, 2.0 * Mat2::Identity());
    ev = edge_vectors_2d(dil, mesh, {1, 1});
    CHECK(ev.col[0][0] == Vec2(2, 0));
    CHECK(ev.col[0][1] == Vec2(0, 2));

    Mat2 rot90;
    rot90 << 0, -1, 1, 0;
    ev = edge_vectors_2d(mapped(mesh, rot90), mesh, {0, 2});
    CHECK(ev.col[0][0].isApprox(Vec2(0, 1), 1e-14));
    CHECK(ev.col[0][1].isApprox(Vec2(-1, 0), 1e-14));
}

TEST_CASE("edge vectors satisfy the cross-cell sign relations") {
    // Columns of neighboring corners are sign-reversed node edge vectors:
    // the second column at corner (a+1,b) equals -(first column at (a,b)).
    Mesh2D mesh({4, 3}, {0.2, 0.3});
    std::mt19937 rng(7);
    const auto cfg = oracle::random_admissible<2>(mesh, rng);
    for (std::int64_t cid = 0; cid < mesh.cell_count(); ++cid) {
        const auto cell = mesh.cell_from_id(cid);
        const auto nodes = cell_nodes(mesh, cell);
        const auto ev = edge_vectors_2d(cfg, mesh, cell);
        auto node_edge = [&](const NodeIndex<2>& from, const NodeIndex<2>& to, double ds) {
            return Vec2((cfg.x[mesh.node_id(to)] - cfg.x[mesh.node_id(from)]) / ds);
        };
        // F1;a,b and F2;a,b at the anchor corner
        CHECK(ev.col[0][0].isApprox(node_edge(nodes[0], nodes[1], mesh.spacing(0)), 1e-14));
        CHECK(ev.col[0][1].isApprox(node_edge(nodes[0], nodes[2], mesh.spacing(1)), 1e-14));
        // F3;a+1,b = -F1;a,b and F4;a,b+1 = -F2;a,b
        CHECK(ev.col[1][1].isApprox(Vec2(-node_edge(nodes[0], nodes[1], mesh.spacing(0))), 1e-14));
        CHECK(ev.col[2][0].isApprox(Vec2(-node_edge(nodes[0], nodes[2], mesh.spacing(1))), 1e-14));
    }
}

TEST_CASE("deformation gradients: identity, dilation, shear") {
    Mesh2D mesh({2, 2}, {0.5, 0.5});
    auto g = deformation_gradients_2d(mapped(mesh, Mat2::Identity()), mesh, {0, 0});
    for (const auto& F : g.F) CHECK(F.isApprox(Mat2::Identity(), 1e-14));

    g = deformation_gradients_2d(mapped(mesh, 2.0 * Mat2::Identity()), mesh, {1, 1});
    for (const auto& F : g.F) CHECK(F.isApprox(Mat2(2.0 * Mat2::Identity()), 1e-14));

    Mat2 shear;
    shear << 1.0, 0.3, 0.0, 1.0;
    g = deformation_gradients_2d(mapped(mesh, shear), mesh, {1, 0});
    for (const auto& F : g.F) CHECK(F.isApprox(shear, 1e-14));
}

TEST_CASE("2D jacobians: identity, rotation, shear, dilation, inversion") {
    Mesh2D mesh({3, 3}, {0.1, 0.1});
    auto jac = jacobians_2d(mapped(mesh, Mat2::Identity()), mesh, {1, 1});
    for (double J : jac.J) CHECK(J == doctest::Approx(1.0).epsilon(1e-14));

    Mat2 rot;
    const double th = 0.7;
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    jac = jacobians_2d(mapped(mesh, rot, Vec2(0.3, -0.2)), mesh, {2, 0});
    for (double J : jac.J) CHECK(J == doctest::Approx(1.0).epsilon(1e-12));

    Mat2 shear;
    shear << 1.0, 0.3, 0.0, 1.0;
    jac = jacobians_2d(mapped(mesh, shear), mesh, {0, 1});
    for (double J : jac.J) CHECK(J == doctest::Approx(1.0).epsilon(1e-12));

    jac = jacobians_2d(mapped(mesh, 2.0 * Mat2::Identity()), mesh, {1, 2});
    for (double J : jac.J) CHECK(J == doctest::Approx(4.0).epsilon(1e-12));

    // collapse one node onto a neighbor: inversion must be reported
    Configuration<2> bad = mapped(mesh, Mat2::Identity());
    bad.x[mesh.node_id({1, 1})] = bad.x[mesh.node_id({2, 2})];
    CHECK_THROWS_AS(jacobians_2d(bad, mesh, {1, 1}), NonPositiveJacobian);
}

TEST_CASE("3D jacobians: identity, dilation, determinant route") {
    Mesh3D mesh({2, 2, 2}, {0.2, 0.25, 0.5});
    Configuration<3> id = reference_configuration(mesh);
    auto jac = jacobians_3d(id, mesh, {0, 0, 0});
    for (double J : jac.J) CHECK(J == doctest::Approx(1.0).epsilon(1e-14));

    Configuration<3> dil = id;
    for (auto& x : dil.x) x *= 1.3;
    jac = jacobians_3d(dil, mesh, {1, 1, 1});
    for (double J : jac.J) CHECK(J == doctest::Approx(1.3 * 1.3 * 1.3).epsilon(1e-12));

    // triple-product values match determinants of the assembled gradients
    std::mt19937 rng(11);
    const auto cfg = oracle::random_admissible<3>(mesh, rng);
    for (std::int64_t cid = 0; cid < mesh.cell_count(); ++cid) {
        const auto cell = mesh.cell_from_id(cid);
        const auto nodes = cell_nodes(mesh, cell);
        std::array<oracle::VecL<3>, 8> q;
        for (int k = 0; k < 8; ++k)
            q[k] = cfg.x[mesh.node_id(nodes[k])].cast<long double>();
        const auto ref = oracle::corner_jacobians_ld<3>(q, mesh.spacing());
        const auto jc = jacobians_3d(cfg, mesh, cell);
        for (int l = 0; l < 8; ++l)
            CHECK(jc.J[l] == doctest::Approx(static_cast<double>(ref[l])).epsilon(1e-12));
    }
}

TEST_CASE("rigid motions leave jacobians at one") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Mesh3D mesh({2, 2, 2}, {0.3, 0.3, 0.3});
    Configuration<3> cfg = reference_configuration(mesh);
    const Mat3 R = Eigen::AngleAxisd(1.1, Vec3(1, 2, -1).normalized()).toRotationMatrix();
    const Vec3 t(uni(rng), uni(rng), uni(rng));
    for (auto& x : cfg.x) x = R * x + t;
    for (std::int64_t cid = 0; cid < mesh.cell_count(); ++cid) {
        const auto jac = jacobians_3d(cfg, mesh, mesh.cell_from_id(cid));
        for (double J : jac.J) CHECK(J == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("midpoint edge vectors average the two levels") {
    Mesh2D mesh({2, 2}, {0.5, 0.5});
    auto id = mapped(mesh, Mat2::Identity());
    auto tripled = mapped(mesh, 3.0 * Mat2::Identity());

    const StatePair<2> same{id, id, 0.1};
    auto ev = midpoint_edge_vectors_2d(same, mesh, {0, 0});
    const auto ev_ref = edge_vectors_2d(id, mesh, {0, 0});
    for (int l = 0; l < 4; ++l)
        for (int c = 0; c < 2; ++c) CHECK(ev.col[l][c].isApprox(ev_ref.col[l][c], 1e-14));

    const StatePair<2> pair{id, tripled, 0.1};
    ev = midpoint_edge_vectors_2d(pair, mesh, {1, 1});
    CHECK(ev.col[0][0].isApprox(Vec2(2, 0), 1e-14));

    std::mt19937 rng(5);
    const auto arb = oracle::random_admissible<2>(mesh, rng);
    const StatePair<2> arb_same{arb, arb, 0.1};
    ev = midpoint_edge_vectors_2d(arb_same, mesh, {1, 0});
    const auto ev_arb = edge_vectors_2d(arb, mesh, {1, 0});
    for (int l = 0; l < 4; ++l)
        for (int c = 0; c < 2; ++c) CHECK(ev.col[l][c].isApprox(ev_arb.col[l][c], 1e-14));
}

TEST_CASE("jacobian_derivative values and directional check") {
    CHECK(jacobian_derivative<2>(Mat2::Identity()).isApprox(Mat2::Identity(), 1e-14));

    Mat2 diag = Vec2(2.0, 3.0).asDiagonal();
    Mat2 expected2 = Vec2(3.0, 2.0).asDiagonal();
    CHECK(jacobian_derivative<2>(diag).isApprox(expected2, 1e-14));

    Mat3 two = 2.0 * Mat3::Identity();
    CHECK(jacobian_derivative<3>(two).isApprox(Mat3(4.0 * Mat3::Identity()), 1e-14));

    Mat2 singular;
    singular << 1.0, 2.0, 0.5, 1.0;
    CHECK_THROWS_AS(jacobian_derivative<2>(singular), NonPositiveJacobian);

    // det(F + h dF) - det(F) = h * (dJ/dF : dF) + O(h^2): the finite
    // difference discrepancy must shrink first order in h.
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Mat3 F = Mat3::Identity();
        Mat3 dF;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                F(i, j) += 0.2 * uni(rng);
                dF(i, j) = uni(rng);
            }
        if (F.determinant() <= 0.1) continue;
        const double directional = jacobian_derivative<3>(F).cwiseProduct(dF).sum();
        double err[2];
        const double hs[2] = {1e-4, 1e-5};
        for (int k = 0; k < 2; ++k) {
            const double fd = ((F + hs[k] * dF).determinant() - F.determinant()) / hs[k];
            err[k] = std::abs(fd - directional);
        }
        CHECK(err[1] < 0.2 * err[0] + 1e-12);  // first-order shrinkage
    }
}

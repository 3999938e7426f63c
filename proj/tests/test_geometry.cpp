#include <doctest.h>

#include "splatgen/geometry/body.hpp"
#include "splatgen/geometry/camera.hpp"
#include "splatgen/geometry/pointops.hpp"
#include "splatgen/geometry/trimesh.hpp"
#include "splatgen/rng.hpp"

#include <cstdio>
#include <set>

using namespace sg;
using geo::Region;
using geo::TriMesh;
using geo::Vec3;

TEST_CASE("densify is a no-op when thresholds exceed every edge and area") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}};
    m.region = {Region::Body, Region::Body, Region::Body};
    auto out = geo::densify_mesh(m, 10.f, 100.f);
    CHECK(out.vertex_count() == 3);
    CHECK(out.face_count() == 1);
}

TEST_CASE("one midpoint subdivision of an equilateral triangle, side 2") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {2, 0, 0}, {1, std::sqrt(3.f), 0}};
    m.faces = {{0, 1, 2}};
    m.region = {Region::Body, Region::Head, Region::Hand};
    auto out = geo::densify_mesh(m, 1.5f, 1e9f);
    CHECK(out.vertex_count() == 6);
    CHECK(out.face_count() == 4);
    // all resulting edges have length 1
    for (auto& f : out.faces)
        for (int e = 0; e < 3; ++e) {
            float len = (out.vertices[f[e]] - out.vertices[f[(e + 1) % 3]]).norm();
            CHECK(len == doctest::Approx(1.f).epsilon(1e-5));
        }
    // input vertices are a prefix
    for (int i = 0; i < 3; ++i) CHECK((out.vertices[i] - m.vertices[i]).norm() == 0.f);
    // midpoint labels follow the lower-index endpoint
    CHECK(out.region[3] == Region::Body); // mid(0,1)
    CHECK(out.region[4] == Region::Head); // mid(1,2)
    CHECK(out.region[5] == Region::Body); // mid(0,2)
}

TEST_CASE("densify is idempotent at fixed thresholds") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {2, 0, 0}, {1, 1.8f, 0}, {3, 1.5f, 0.5f}};
    m.faces = {{0, 1, 2}, {1, 3, 2}};
    m.region = {Region::Body, Region::Body, Region::Head, Region::Hand};
    auto once = geo::densify_mesh(m, 0.7f, 1e9f);
    auto twice = geo::densify_mesh(once, 0.7f, 1e9f);
    CHECK(once.vertex_count() == twice.vertex_count());
    CHECK(once.face_count() == twice.face_count());
}

TEST_CASE("zero-area faces pass through unsplit") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
    m.faces = {{0, 1, 2}}; // collinear
    m.region = {Region::Body, Region::Body, Region::Body};
    auto out = geo::densify_mesh(m, 0.5f, 1e-9f);
    CHECK(out.face_count() == 1);
}

TEST_CASE("flat square normals point +z") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.faces = {{0, 1, 2}, {0, 2, 3}};
    m.region.assign(4, Region::Body);
    auto r = geo::vertex_normals(m);
    CHECK(r.fallback_count == 0);
    for (auto& n : r.normals) {
        CHECK(n.z() == doctest::Approx(1.f));
        CHECK(n.head<2>().norm() == doctest::Approx(0.f));
    }
}

TEST_CASE("regular tetrahedron normals point away from the centroid") {
    TriMesh m;
    m.vertices = {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
    m.faces = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
    m.region.assign(4, Region::Body);
    auto r = geo::vertex_normals(m);
    REQUIRE(r.fallback_count == 0);
    for (size_t i = 0; i < 4; ++i) {
        // by symmetry, the area-weighted normal at a vertex is the unit vector
        // from the centroid (origin) through the vertex
        Vec3 expect = m.vertices[i].normalized();
        CHECK((r.normals[i] - expect).norm() < 1e-5f);
    }
}

TEST_CASE("icosphere normals match radial directions") {
    // start from an icosahedron and densify; projected-to-sphere mesh normals
    // should approach the radial field
    const float phi = (1.f + std::sqrt(5.f)) / 2.f;
    TriMesh m;
    m.vertices = {{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                  {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                  {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
    m.region.assign(12, Region::Body);
    for (auto& v : m.vertices) v.normalize();
    auto dense = geo::densify_mesh(m, 0.25f, 1e9f);
    for (auto& v : dense.vertices) v.normalize();
    auto r = geo::vertex_normals(dense);
    REQUIRE(r.fallback_count == 0);
    for (int64_t i = 0; i < dense.vertex_count(); ++i) {
        float cosang = r.normals[i].dot(dense.vertices[i].normalized());
        CHECK(std::acos(std::clamp(cosang, -1.f, 1.f)) < 1e-2f);
    }
}

TEST_CASE("knn trivial and hand-enumerated cases") {
    std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}};
    auto self1 = geo::knn_indices(line, line, 1, true);
    for (int i = 0; i < 3; ++i) CHECK(self1.row(i)[0] == i);

    auto g = geo::knn_indices(line, line, 2, false);
    CHECK(g.row(0)[0] == 1);
    CHECK(g.row(0)[1] == 2);
    CHECK(g.row(1)[0] == 0);
    CHECK(g.row(1)[1] == 2);
    CHECK(g.row(2)[0] == 1);
    CHECK(g.row(2)[1] == 0);
}

TEST_CASE("knn matches the O(N^2) brute-force oracle on 100 seeded points") {
    Rng rng(7);
    std::vector<Vec3> pts(100);
    for (auto& p : pts)
        p = {(float)rng.uniform(-1, 1), (float)rng.uniform(-1, 1), (float)rng.uniform(-1, 1)};
    auto g = geo::knn_indices(pts, pts, 8, true);
    for (int i = 0; i < 100; ++i) {
        std::vector<std::pair<double, int>> dists;
        for (int j = 0; j < 100; ++j)
            dists.emplace_back((double)(pts[i] - pts[j]).squaredNorm(), j);
        std::sort(dists.begin(), dists.end());
        for (int k = 0; k < 8; ++k) CHECK(g.row(i)[k] == dists[(size_t)k].second);
        // non-decreasing distances along the row
        for (int k = 1; k < 8; ++k)
            CHECK((pts[i] - pts[g.row(i)[k]]).squaredNorm() >=
                  (pts[i] - pts[g.row(i)[k - 1]]).squaredNorm());
    }
}

TEST_CASE("farthest-point subsample: enumerated and permutation cases") {
    std::vector<Vec3> square = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    for (uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
        auto r = geo::farthest_point_subsample(square, 2, seed);
        float d = (r.points[0] - r.points[1]).norm();
        CHECK(d == doctest::Approx(std::sqrt(2.f)));
    }
    auto all = geo::farthest_point_subsample(square, 4, 5);
    std::set<int32_t> seen(all.origin_indices.begin(), all.origin_indices.end());
    CHECK(seen.size() == 4);
    auto one = geo::farthest_point_subsample(square, 1, 5);
    CHECK(one.points.size() == 1);
    // bitwise reproducible
    auto again = geo::farthest_point_subsample(square, 2, 99);
    auto again2 = geo::farthest_point_subsample(square, 2, 99);
    CHECK(again.origin_indices == again2.origin_indices);
}

TEST_CASE("normal_frame properties") {
    CHECK(geo::normal_frame({0, 0, 1}).isApprox(Eigen::Matrix3f::Identity(), 1e-6f));

    auto R = geo::normal_frame({1, 0, 0});
    CHECK((R.col(2) - Vec3(1, 0, 0)).norm() < 1e-6f);
    CHECK((R.col(0) - Vec3(0, 1, 0)).norm() < 1e-6f); // +y projected
    CHECK(R.determinant() == doctest::Approx(1.f).epsilon(1e-5));

    Rng rng(123);
    for (int i = 0; i < 1000; ++i) {
        Vec3 n{(float)rng.normal(), (float)rng.normal(), (float)rng.normal()};
        if (n.norm() < 1e-3f) continue;
        n.normalize();
        auto F = geo::normal_frame(n);
        CHECK((F * Vec3(0, 0, 1) - n).norm() < 1e-6f);
        CHECK((F.transpose() * F - Eigen::Matrix3f::Identity()).norm() < 1e-5f);
        CHECK(F.determinant() == doctest::Approx(1.f).epsilon(1e-4));
    }

    CHECK_THROWS_AS(geo::normal_frame({0, 0, 0}), std::invalid_argument);
    CHECK_THROWS_AS(geo::normal_frame({0, 0, 2}), std::invalid_argument);
}

TEST_CASE("camera pinhole algebra") {
    geo::Camera cam;
    cam.position = {0, 0, -2};
    cam.look_at = {0, 0, 0};
    cam.up = {0, 1, 0};
    cam.vertical_fov = 1.0f;
    cam.width = cam.height = 64;
    cam.validate();

    // point straight ahead lands at the image center with depth = distance
    Vec3 c = cam.to_camera({0, 0, 0});
    CHECK(c.z() == doctest::Approx(2.f));
    // continuous image coordinates: optical axis at W/2, pixel i spans [i,i+1)
    auto px = cam.to_pixel(c);
    CHECK(px.x() == doctest::Approx(32.f).epsilon(1e-4));
    CHECK(px.y() == doctest::Approx(32.f).epsilon(1e-4));

    // a point one unit up at depth d projects focal()/d pixels above center;
    // image y runs downward
    Vec3 upc = cam.to_camera({0, 1, 0});
    auto up_px = cam.to_pixel(upc);
    CHECK(up_px.y() == doctest::Approx(32.f - cam.focal() / 2.f).epsilon(1e-4));
    CHECK(cam.focal() == doctest::Approx(0.5f * 64.f / std::tan(0.5f)).epsilon(1e-5));
}

TEST_CASE("canonical rig surrounds the subject at four azimuths") {
    auto rig = geo::canonical_rig({0, 1, 0}, 3.f, 0.9f, 32, 32);
    REQUIRE(rig.size() == 4);
    for (auto& cam : rig) {
        CHECK((cam.position - Vec3(0, 1, 0)).norm() == doctest::Approx(3.f).epsilon(1e-5));
        CHECK((cam.look_at - Vec3(0, 1, 0)).norm() < 1e-6f);
    }
    // front and back cameras oppose each other through the center
    CHECK((rig[0].position + rig[1].position - 2 * Vec3(0, 1, 0)).norm() < 1e-5f);
    CHECK((rig[2].position + rig[3].position - 2 * Vec3(0, 1, 0)).norm() < 1e-5f);
}

TEST_CASE("PLY round trip preserves vertices, faces and regions") {
    TriMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0.5f, 0.5f, 1.f}};
    m.faces = {{0, 1, 2}, {1, 3, 2}};
    m.region = {Region::Body, Region::Head, Region::Hand, Region::Body};
    std::string path = "roundtrip_test.ply";
    geo::save_ply(m, path);
    auto back = geo::load_ply(path);
    std::remove(path.c_str());
    REQUIRE(back.vertex_count() == 4);
    REQUIRE(back.face_count() == 2);
    for (int i = 0; i < 4; ++i) {
        CHECK((back.vertices[i] - m.vertices[i]).norm() < 1e-6f);
        CHECK(back.region[i] == m.region[i]);
    }
    CHECK(back.faces == m.faces);
}

TEST_CASE("mannequin is a valid labeled mesh with a working shape basis") {
    auto body = geo::build_mannequin(10);
    body.template_mesh.validate();
    CHECK(body.template_mesh.vertex_count() >= 300);
    CHECK(body.shape_dims == 10);
    CHECK((int64_t)body.shape_basis.size() == body.template_mesh.vertex_count() * 3 * 10);

    // zero beta reproduces the template
    std::vector<float> beta(10, 0.f);
    auto posed = body.posed_vertices(beta);
    for (int64_t i = 0; i < body.template_mesh.vertex_count(); ++i)
        CHECK((posed[i] - body.template_mesh.vertices[i]).norm() == 0.f);

    // first basis direction (overall height) actually moves vertices
    beta[0] = 1.f;
    auto tall = body.posed_vertices(beta);
    double moved = 0;
    for (size_t i = 0; i < tall.size(); ++i) moved += (tall[i] - posed[i]).norm();
    CHECK(moved > 0.1);

    // head region exists and sits above the torso mean
    float head_y = 0, body_y = 0;
    int nh = 0, nb = 0;
    for (int64_t i = 0; i < body.template_mesh.vertex_count(); ++i) {
        if (body.template_mesh.region[(size_t)i] == Region::Head) {
            head_y += body.template_mesh.vertices[(size_t)i].y();
            ++nh;
        } else if (body.template_mesh.region[(size_t)i] == Region::Body) {
            body_y += body.template_mesh.vertices[(size_t)i].y();
            ++nb;
        }
    }
    REQUIRE(nh > 0);
    REQUIRE(nb > 0);
    CHECK(head_y / nh > body_y / nb);
}

TEST_CASE("build_anchors returns exactly n labeled anchors with unit normals") {
    auto body = geo::build_mannequin(4);
    auto anchors = geo::build_anchors(body, 500, 0.08f, 1e9f, 21);
    REQUIRE((int64_t)anchors.positions.size() == 500);
    REQUIRE(anchors.normals.size() == 500);
    REQUIRE(anchors.regions.size() == 500);
    REQUIRE(anchors.parts.size() == 500);
    CHECK(anchors.anchor_shape_basis.size() == 500u * 3u * 4u);
    for (auto& n : anchors.normals) CHECK(n.norm() == doctest::Approx(1.f).epsilon(1e-3));

    // beta displacement at anchors matches the basis contraction
    std::vector<float> beta = {0.5f, -0.25f, 0.1f, 0.f};
    auto moved = geo::anchors_for_beta(anchors, beta, 4);
    for (size_t i = 0; i < 5; ++i) {
        Vec3 expect = anchors.positions[i];
        for (int c = 0; c < 3; ++c)
            for (int b = 0; b < 4; ++b)
                expect[c] += anchors.anchor_shape_basis[(i * 3 + c) * 4 + b] * beta[(size_t)b];
        CHECK((moved[i] - expect).norm() < 1e-6f);
    }
}

#include "splatgen/geometry/body.hpp"

#include <cmath>
#include <stdexcept>

namespace sg::geo {

namespace {

Region part_region(Part p) {
    switch (p) {
    case Part::Head: return Region::Head;
    case Part::HandLeft:
    case Part::HandRight: return Region::Hand;
    default: return Region::Body;
    }
}

// Smooth per-vertex offset of shape-basis component j at template position p.
Vec3 basis_offset(const Vec3& p, int j) {
    auto sigw = [](float x, float c, float s) { return 1.f / (1.f + std::exp(-(x - c) / s)); };
    switch (j) {
    case 0: // overall height
        return {0.f, (p.y() - 0.9f) * 0.08f, 0.f};
    case 1: // lateral girth
        return {p.x() * 0.06f, 0.f, p.z() * 0.06f};
    case 2: { // head size
        float w = sigw(p.y(), 1.48f, 0.02f);
        return (p - Vec3(0.f, 1.62f, 0.f)) * (0.10f * w);
    }
    case 3: { // arm length
        float t = std::max(std::abs(p.x()) - 0.18f, 0.f);
        return {(p.x() > 0.f ? 1.f : -1.f) * t * 0.10f, 0.f, 0.f};
    }
    case 4: { // leg length
        float w = 1.f - sigw(p.y(), 1.02f, 0.03f);
        return {0.f, -(1.02f - std::min(p.y(), 1.02f)) * 0.08f * w, 0.f};
    }
    case 5: { // torso girth
        float w = std::exp(-0.5f * std::pow((p.y() - 1.15f) / 0.25f, 2.f));
        return {p.x() * 0.10f * w, 0.f, p.z() * 0.10f * w};
    }
    default: { // smooth wiggles
        float s = 0.008f * std::sin(3.f * p.y() + (float)j);
        return {s, 0.f, s * 0.5f};
    }
    }
}

struct Builder {
    TriMesh mesh;
    std::vector<int32_t> parts;

    // Capsule by sphere inflation: unit-sphere vertex v maps to
    // radius .* v + sign(v_axis) * half_len * axis, in the frame of `axis`.
    void add_capsule(Part part, const Vec3& center, const Vec3& axis, float half_len,
                     const Vec3& radius, int rings, int segs) {
        Eigen::Matrix3f R = normal_frame(axis.normalized());
        int32_t base = (int32_t)mesh.vertices.size();
        auto push = [&](const Vec3& unit) {
            Vec3 local(radius.x() * unit.x(), radius.y() * unit.y(), radius.z() * unit.z());
            local.z() += (unit.z() >= 0.f ? 1.f : -1.f) * half_len;
            mesh.vertices.push_back(center + R * local);
            mesh.region.push_back(part_region(part));
            parts.push_back((int32_t)part);
        };
        push(Vec3(0.f, 0.f, 1.f)); // top pole
        for (int i = 1; i < rings; ++i) {
            float th = 3.14159265f * (float)i / (float)rings;
            for (int jx = 0; jx < segs; ++jx) {
                float ph = 2.f * 3.14159265f * (float)jx / (float)segs;
                push(Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                          std::cos(th)));
            }
        }
        push(Vec3(0.f, 0.f, -1.f)); // bottom pole
        int32_t bottom = (int32_t)mesh.vertices.size() - 1;

        auto ring = [&](int i, int jx) { return base + 1 + (i - 1) * segs + (jx % segs); };
        for (int jx = 0; jx < segs; ++jx)
            mesh.faces.push_back({base, ring(1, jx + 1), ring(1, jx)});
        for (int i = 1; i < rings - 1; ++i) {
            for (int jx = 0; jx < segs; ++jx) {
                int32_t a = ring(i, jx), b = ring(i, jx + 1);
                int32_t c = ring(i + 1, jx), d = ring(i + 1, jx + 1);
                mesh.faces.push_back({a, b, d});
                mesh.faces.push_back({a, d, c});
            }
        }
        for (int jx = 0; jx < segs; ++jx)
            mesh.faces.push_back({bottom, ring(rings - 1, jx), ring(rings - 1, jx + 1)});
    }
};

} // namespace

BodyModel build_mannequin(int32_t shape_dims) {
    Builder b;
    const Vec3 yaxis(0.f, 1.f, 0.f), xaxis(1.f, 0.f, 0.f), zaxis(0.f, 0.f, 1.f);

    b.add_capsule(Part::Torso, {0.f, 1.15f, 0.f}, yaxis, 0.24f, {0.16f, 0.16f, 0.10f}, 8, 10);
    b.add_capsule(Part::Head, {0.f, 1.62f, 0.f}, yaxis, 0.02f, {0.10f, 0.11f, 0.11f}, 6, 8);
    b.add_capsule(Part::ArmRight, {0.40f, 1.42f, 0.f}, xaxis, 0.21f, {0.045f, 0.045f, 0.045f}, 5, 8);
    b.add_capsule(Part::ArmLeft, {-0.40f, 1.42f, 0.f}, xaxis, 0.21f, {0.045f, 0.045f, 0.045f}, 5, 8);
    b.add_capsule(Part::HandRight, {0.68f, 1.42f, 0.f}, xaxis, 0.02f, {0.05f, 0.045f, 0.03f}, 4, 6);
    b.add_capsule(Part::HandLeft, {-0.68f, 1.42f, 0.f}, xaxis, 0.02f, {0.05f, 0.045f, 0.03f}, 4, 6);
    b.add_capsule(Part::LegRight, {0.09f, 0.55f, 0.f}, yaxis, 0.38f, {0.07f, 0.07f, 0.07f}, 6, 8);
    b.add_capsule(Part::LegLeft, {-0.09f, 0.55f, 0.f}, yaxis, 0.38f, {0.07f, 0.07f, 0.07f}, 6, 8);
    b.add_capsule(Part::FootRight, {0.09f, 0.06f, 0.04f}, zaxis, 0.04f, {0.05f, 0.045f, 0.06f}, 4, 6);
    b.add_capsule(Part::FootLeft, {-0.09f, 0.06f, 0.04f}, zaxis, 0.04f, {0.05f, 0.045f, 0.06f}, 4, 6);

    b.mesh.validate();

    BodyModel body;
    body.template_mesh = std::move(b.mesh);
    body.parts = std::move(b.parts);
    body.shape_dims = shape_dims;
    int64_t v = body.template_mesh.vertex_count();
    body.shape_basis.assign(v * 3 * shape_dims, 0.f);
    for (int64_t i = 0; i < v; ++i) {
        for (int32_t j = 0; j < shape_dims; ++j) {
            Vec3 off = basis_offset(body.template_mesh.vertices[i], j);
            for (int c = 0; c < 3; ++c)
                body.shape_basis[(i * 3 + c) * shape_dims + j] = off[c];
        }
    }
    return body;
}

std::vector<Vec3> BodyModel::posed_vertices(const std::vector<float>& beta) const {
    if ((int32_t)beta.size() != shape_dims)
        throw std::invalid_argument("beta size mismatch");
    int64_t v = template_mesh.vertex_count();
    std::vector<Vec3> out(v);
    for (int64_t i = 0; i < v; ++i) {
        Vec3 p = template_mesh.vertices[i];
        for (int c = 0; c < 3; ++c)
            for (int32_t j = 0; j < shape_dims; ++j)
                p[c] += shape_basis[(i * 3 + c) * shape_dims + j] * beta[j];
        out[i] = p;
    }
    return out;
}

AnchorSet build_anchors(const BodyModel& body, int64_t n, float edge_thresh,
                        float area_thresh, uint64_t seed) {
    AnchorSet a;
    std::vector<int32_t> parts = body.parts;
    a.dense_mesh = densify_mesh(body.template_mesh, edge_thresh, area_thresh, &parts);
    if (a.dense_mesh.vertex_count() < n)
        throw std::invalid_argument("densified mesh has fewer vertices than requested anchors; "
                                    "lower the thresholds");
    auto nrm = vertex_normals(a.dense_mesh);
    auto sub = farthest_point_subsample(a.dense_mesh.vertices, n, seed);
    a.positions = std::move(sub.points);
    a.dense_indices = std::move(sub.origin_indices);
    a.normals.reserve(n);
    a.regions.reserve(n);
    a.parts.reserve(n);
    a.anchor_shape_basis.assign(n * 3 * body.shape_dims, 0.f);
    for (int64_t i = 0; i < n; ++i) {
        int32_t di = a.dense_indices[i];
        a.normals.push_back(nrm.normals[di]);
        a.regions.push_back(a.dense_mesh.region[di]);
        a.parts.push_back(parts[di]);
        for (int32_t j = 0; j < body.shape_dims; ++j) {
            Vec3 off = basis_offset(a.positions[i], j);
            for (int c = 0; c < 3; ++c)
                a.anchor_shape_basis[(i * 3 + c) * body.shape_dims + j] = off[c];
        }
    }
    return a;
}

std::vector<Vec3> anchors_for_beta(const AnchorSet& a, const std::vector<float>& beta,
                                   int32_t shape_dims) {
    if ((int32_t)beta.size() != shape_dims)
        throw std::invalid_argument("beta size mismatch");
    int64_t n = (int64_t)a.positions.size();
    std::vector<Vec3> out(n);
    for (int64_t i = 0; i < n; ++i) {
        Vec3 p = a.positions[i];
        for (int c = 0; c < 3; ++c)
            for (int32_t j = 0; j < shape_dims; ++j)
                p[c] += a.anchor_shape_basis[(i * 3 + c) * shape_dims + j] * beta[j];
        out[i] = p;
    }
    return out;
}

} // namespace sg::geo

#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace sg::geo {

using Vec3 = Eigen::Vector3f;

enum class Region : int32_t { Body = 0, Head = 1, Hand = 2 };

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int32_t, 3>> faces;
    std::vector<Region> region; // one label per vertex

    int64_t vertex_count() const { return (int64_t)vertices.size(); }
    int64_t face_count() const { return (int64_t)faces.size(); }

    void validate() const; // throws std::invalid_argument on bad indices / degenerate faces
};

/// Recursive 4-way midpoint subdivision until no face has an edge longer than
/// edge_thresh or area above area_thresh. Zero-area faces pass through.
/// Input vertices are a prefix of the output; midpoint labels follow the
/// lower-index endpoint. `aux` (optional) is an extra per-vertex label
/// propagated by the same rule.
TriMesh densify_mesh(const TriMesh& mesh, float edge_thresh, float area_thresh,
                     std::vector<int32_t>* aux = nullptr);

struct NormalResult {
    std::vector<Vec3> normals;
    int64_t fallback_count = 0; // vertices that got the (0,0,1) fallback
};

/// Area-weighted vertex normals, unit length.
NormalResult vertex_normals(const TriMesh& mesh);

void save_ply(const TriMesh& mesh, const std::string& path);
TriMesh load_ply(const std::string& path);

} // namespace sg::geo

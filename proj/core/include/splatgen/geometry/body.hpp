#pragma once

#include "splatgen/geometry/pointops.hpp"
#include "splatgen/geometry/trimesh.hpp"

#include <vector>

namespace sg::geo {

// Fine-grained body parts, used by the dataset painter; the TriMesh region
// labels (body/head/hand) are derived from these.
enum class Part : int32_t {
    Torso = 0,
    Head = 1,
    ArmLeft = 2,
    ArmRight = 3,
    HandLeft = 4,
    HandRight = 5,
    LegLeft = 6,
    LegRight = 7,
    FootLeft = 8,
    FootRight = 9,
};

struct BodyModel {
    TriMesh template_mesh;          // canonical T-pose
    std::vector<int32_t> parts;     // per-vertex Part tag
    std::vector<float> shape_basis; // V x 3 x B row-major
    int32_t shape_dims = 0;         // B

    /// template vertices + shape_basis . beta
    std::vector<Vec3> posed_vertices(const std::vector<float>& beta) const;
};

/// Capsule-limbed procedural mannequin (torso, head, arms, hands, legs, feet)
/// in a T-pose, ~600 vertices before densification, with a B-dimensional
/// smooth shape basis.
BodyModel build_mannequin(int32_t shape_dims = 10);

/// Densify the template and pick exactly `n` anchor points (farthest-point
/// subsample of the densified vertices). Returns anchor positions, unit
/// normals, regions and part tags.
struct AnchorSet {
    std::vector<Vec3> positions;
    std::vector<Vec3> normals;
    std::vector<Region> regions;
    std::vector<int32_t> parts;
    std::vector<int32_t> dense_indices;   // index into the densified mesh
    TriMesh dense_mesh;
    std::vector<float> anchor_shape_basis; // N x 3 x B, evaluated at the anchors
};

AnchorSet build_anchors(const BodyModel& body, int64_t n, float edge_thresh,
                        float area_thresh, uint64_t seed);

/// Anchor positions displaced by the shape basis for a given beta.
std::vector<Vec3> anchors_for_beta(const AnchorSet& a, const std::vector<float>& beta,
                                   int32_t shape_dims);

} // namespace sg::geo

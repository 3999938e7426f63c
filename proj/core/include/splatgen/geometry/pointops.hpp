#pragma once

#include "splatgen/geometry/trimesh.hpp"
#include "splatgen/rng.hpp"

#include <vector>

namespace sg::geo {

struct KnnGraph {
    std::vector<int32_t> indices; // N x k, row-major
    int32_t k = 0;

    int64_t rows() const { return k == 0 ? 0 : (int64_t)indices.size() / k; }
    const int32_t* row(int64_t i) const { return indices.data() + i * k; }
};

/// Exact Euclidean kNN of each query point into the reference set; rows sorted
/// by ascending distance, ties by ascending index. include_self=false is only
/// meaningful when query is the reference set: it skips reference index == row.
KnnGraph knn_indices(const std::vector<Vec3>& query, const std::vector<Vec3>& reference,
                     int32_t k, bool include_self = true);

struct SubsampleResult {
    std::vector<Vec3> points;
    std::vector<int32_t> origin_indices;
};

/// Farthest-point subsampling: seeded uniform first pick, then greedy
/// max-min-distance, ties broken by lowest index. Deterministic given seed.
SubsampleResult farthest_point_subsample(const std::vector<Vec3>& points, int64_t n,
                                         uint64_t seed);

/// Rotation whose third column equals `normal`; first column is the projection
/// of +x (or +y when nearly parallel) onto the tangent plane.
Eigen::Matrix3f normal_frame(const Vec3& normal);

} // namespace sg::geo

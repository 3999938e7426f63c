#include "splatgen/geometry/pointops.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sg::geo {

KnnGraph knn_indices(const std::vector<Vec3>& query, const std::vector<Vec3>& reference,
                     int32_t k, bool include_self) {
    int64_t q = (int64_t)query.size(), r = (int64_t)reference.size();
    int64_t avail = include_self ? r : r - 1;
    if (k <= 0 || k > avail)
        throw std::invalid_argument("knn_indices: k out of range");

    KnnGraph g;
    g.k = k;
    g.indices.resize(q * k);
    std::vector<std::pair<float, int32_t>> cand;
    cand.reserve(r);
    for (int64_t i = 0; i < q; ++i) {
        cand.clear();
        for (int64_t j = 0; j < r; ++j) {
            if (!include_self && j == i) continue;
            float d2 = (reference[j] - query[i]).squaredNorm();
            cand.emplace_back(d2, (int32_t)j);
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int32_t j = 0; j < k; ++j) g.indices[i * k + j] = cand[j].second;
    }
    return g;
}

SubsampleResult farthest_point_subsample(const std::vector<Vec3>& points, int64_t n,
                                         uint64_t seed) {
    int64_t total = (int64_t)points.size();
    if (n < 1 || n > total)
        throw std::invalid_argument("farthest_point_subsample: n out of range");

    SubsampleResult res;
    res.origin_indices.reserve(n);
    Rng rng(seed);
    int64_t first = (int64_t)rng.below((uint64_t)total);
    res.origin_indices.push_back((int32_t)first);

    std::vector<float> min_d2(total, std::numeric_limits<float>::max());
    int64_t last = first;
    for (int64_t picked = 1; picked < n; ++picked) {
        int64_t best = -1;
        float best_d2 = -1.f;
        for (int64_t j = 0; j < total; ++j) {
            float d2 = (points[j] - points[last]).squaredNorm();
            if (d2 < min_d2[j]) min_d2[j] = d2;
            if (min_d2[j] > best_d2) {
                best_d2 = min_d2[j];
                best = j;
            }
        }
        res.origin_indices.push_back((int32_t)best);
        last = best;
    }
    res.points.reserve(n);
    for (int32_t i : res.origin_indices) res.points.push_back(points[i]);
    return res;
}

Eigen::Matrix3f normal_frame(const Vec3& normal) {
    float len = normal.norm();
    if (len < 1e-8f) throw std::invalid_argument("normal_frame: zero vector");
    if (std::abs(len - 1.f) > 1e-4f)
        throw std::invalid_argument("normal_frame: input not unit length");
    Vec3 n = normal / len;
    Vec3 ref = std::abs(n.x()) > 0.99f ? Vec3(0.f, 1.f, 0.f) : Vec3(1.f, 0.f, 0.f);
    Vec3 t = ref - n.dot(ref) * n;
    t.normalize();
    Vec3 b = n.cross(t);
    Eigen::Matrix3f R;
    R.col(0) = t;
    R.col(1) = b;
    R.col(2) = n;
    return R;
}

} // namespace sg::geo

#pragma once

#include "splatgen/ad/tensor.hpp"
#include "splatgen/geometry/trimesh.hpp"

#include <vector>

namespace sg {

/// Constraint bounds per body region: head/hand are stricter than body.
struct ConstraintRanges {
    float disp_body = 0.04f, disp_head = 0.02f, disp_hand = 0.02f;  // meters
    float scale_body = 0.02f, scale_head = 0.01f, scale_hand = 0.01f;
    float s_min = 1e-4f;

    float disp_bound(geo::Region r) const {
        switch (r) {
        case geo::Region::Head: return disp_head;
        case geo::Region::Hand: return disp_hand;
        default: return disp_body;
        }
    }
    float scale_bound(geo::Region r) const {
        switch (r) {
        case geo::Region::Head: return scale_head;
        case geo::Region::Hand: return scale_hand;
        default: return scale_body;
        }
    }
    void validate() const {
        if (disp_head > disp_body || disp_hand > disp_body || scale_head > scale_body ||
            scale_hand > scale_body)
            throw std::invalid_argument("head/hand bounds must not exceed body bounds");
        if (s_min <= 0.f || s_min >= scale_head || s_min >= scale_hand)
            throw std::invalid_argument("s_min out of range");
    }
};

/// Concrete splat population: anchors and rotations are fixed (mesh-derived),
/// opacity is 1 everywhere; only delta/scale/color are learned quantities.
struct GaussianSet {
    std::vector<geo::Vec3> anchors;              // X0, N x 3
    std::vector<Eigen::Matrix3f> rotations;      // from normal_frame(normal)
    std::vector<geo::Region> regions;
    ad::Tensor delta;                            // N x 3 (m)
    ad::Tensor scale;                            // N x 3 (m)
    ad::Tensor color;                            // N x 3, linear RGB in [0,1]

    int64_t count() const { return (int64_t)anchors.size(); }

    /// Pack per-point parameters as N x 9 rows [delta | scale | color].
    ad::Tensor pack_params() const;

    /// Inverse of pack_params for fixed anchors/rotations.
    void unpack_params(const ad::Tensor& p);

    void validate(const ConstraintRanges& ranges) const;
};

} // namespace sg

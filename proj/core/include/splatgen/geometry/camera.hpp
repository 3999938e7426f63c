#pragma once

#include "splatgen/geometry/trimesh.hpp"

namespace sg::geo {

/// Pinhole look-at camera; image x right, y down, z forward.
struct Camera {
    Vec3 position{0.f, 0.f, 0.f};
    Vec3 look_at{0.f, 0.f, 1.f};
    Vec3 up{0.f, 1.f, 0.f};
    float vertical_fov = 0.8f; // radians
    int width = 128;
    int height = 128;

    void validate() const;

    /// Rows are the camera axes (right, down, forward): world -> camera rotation.
    Eigen::Matrix3f world_to_cam() const;

    float focal() const; // pixels, square pixels assumed

    /// Camera-space coordinates (x right, y down, z = depth).
    Vec3 to_camera(const Vec3& world) const;

    /// Pixel coordinates of a camera-space point (requires z > 0).
    Eigen::Vector2f to_pixel(const Vec3& cam) const;
};

/// The four canonical capture views (front, back, left, right) around a
/// subject centered at `center` with the given radius and elevation offset.
std::vector<Camera> canonical_rig(const Vec3& center, float radius, float fov, int width,
                                  int height);

} // namespace sg::geo

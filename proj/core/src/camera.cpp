#include "splatgen/geometry/camera.hpp"

#include <cmath>
#include <stdexcept>

namespace sg::geo {

void Camera::validate() const {
    if (vertical_fov <= 0.f || vertical_fov >= 3.14159265f)
        throw std::invalid_argument("camera fov out of (0, pi)");
    Vec3 fwd = look_at - position;
    if (fwd.norm() < 1e-9f) throw std::invalid_argument("camera look_at equals position");
    if (fwd.normalized().cross(up.normalized()).norm() < 1e-6f)
        throw std::invalid_argument("camera up parallel to view direction");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera size");
}

Eigen::Matrix3f Camera::world_to_cam() const {
    Vec3 fwd = (look_at - position).normalized();
    Vec3 right = fwd.cross(up).normalized();
    Vec3 down = fwd.cross(right).normalized();
    Eigen::Matrix3f W;
    W.row(0) = right;
    W.row(1) = down;
    W.row(2) = fwd;
    return W;
}

float Camera::focal() const {
    return 0.5f * (float)height / std::tan(0.5f * vertical_fov);
}

Vec3 Camera::to_camera(const Vec3& world) const {
    return world_to_cam() * (world - position);
}

Eigen::Vector2f Camera::to_pixel(const Vec3& cam) const {
    float f = focal();
    return {0.5f * (float)width + f * cam.x() / cam.z(),
            0.5f * (float)height + f * cam.y() / cam.z()};
}

std::vector<Camera> canonical_rig(const Vec3& center, float radius, float fov, int width,
                                  int height) {
    // azimuths 0/180/90/270 degrees: front, back, left, right
    std::vector<Camera> cams;
    const float az[4] = {0.f, 3.14159265f, 0.5f * 3.14159265f, 1.5f * 3.14159265f};
    for (float a : az) {
        Camera c;
        c.position = center + Vec3(radius * std::sin(a), 0.f, radius * std::cos(a));
        c.look_at = center;
        c.up = Vec3(0.f, 1.f, 0.f);
        c.vertical_fov = fov;
        c.width = width;
        c.height = height;
        c.validate();
        cams.push_back(c);
    }
    return cams;
}

} // namespace sg::geo

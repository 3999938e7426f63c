#include "splatgen/raster/rasterizer.hpp"

namespace sg::raster {

std::vector<Splat2D> project_gaussians(const GaussianSet& g, const geo::Camera& cam,
                                       const RasterSettings& settings) {
    cam.validate();
    Eigen::Matrix3f W = cam.world_to_cam();
    float f = cam.focal();
    float cx = 0.5f * (float)cam.width, cy = 0.5f * (float)cam.height;

    std::vector<Splat2D> out;
    for (int64_t i = 0; i < g.count(); ++i) {
        geo::Vec3 world = g.anchors[i] + geo::Vec3(g.delta.data[i * 3], g.delta.data[i * 3 + 1],
                                                   g.delta.data[i * 3 + 2]);
        geo::Vec3 pc = W * (world - cam.position);
        if (pc.z() <= settings.near_plane) continue;

        Splat2D s;
        s.point_index = (int32_t)i;
        s.depth = pc.z();
        s.mean = {cx + f * pc.x() / pc.z(), cy + f * pc.y() / pc.z()};
        s.color = {g.color.data[i * 3], g.color.data[i * 3 + 1], g.color.data[i * 3 + 2]};

        Eigen::Vector3f sv(g.scale.data[i * 3], g.scale.data[i * 3 + 1], g.scale.data[i * 3 + 2]);
        Eigen::Matrix3f cov3d =
            g.rotations[i] * sv.cwiseProduct(sv).asDiagonal() * g.rotations[i].transpose();
        Eigen::Matrix3f M = W * cov3d * W.transpose();
        Eigen::Matrix<float, 2, 3> J;
        J.setZero();
        float z = pc.z();
        J(0, 0) = f / z;
        J(0, 2) = -f * pc.x() / (z * z);
        J(1, 1) = f / z;
        J(1, 2) = -f * pc.y() / (z * z);
        s.cov2d = J * M * J.transpose();
        s.cov2d(0, 0) += settings.dilation;
        s.cov2d(1, 1) += settings.dilation;
        if (s.cov2d.determinant() <= 0.f)
            throw std::runtime_error("project_gaussians: non-PSD 2D covariance");
        out.push_back(s);
    }
    std::stable_sort(out.begin(), out.end(), [](const Splat2D& a, const Splat2D& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.point_index < b.point_index;
    });
    return out;
}

Image render_image(const GaussianSet& g, const geo::Camera& cam,
                   const Eigen::Vector3f& background, const RasterSettings& settings) {
    ad::NoGrad ng;
    auto delta = ad::VarT<float>::constant(g.delta);
    auto scale = ad::VarT<float>::constant(g.scale);
    auto color = ad::VarT<float>::constant(g.color);
    ad::Tensor alpha;
    auto img = render(delta, scale, color, g.anchors, g.rotations, cam, background, settings,
                      &alpha);
    Image out = Image::from_tensor(img.value());
    std::copy(alpha.data.begin(), alpha.data.end(), out.alpha.begin());
    return out;
}

} // namespace sg::raster

#pragma once

#include "splatgen/ad/ops.hpp"
#include "splatgen/gaussians.hpp"
#include "splatgen/geometry/camera.hpp"
#include "splatgen/raster/image.hpp"

#include <memory>

namespace sg::raster {

using ad::TensorT;
using ad::VarT;

struct RasterSettings {
    float dilation = 0.3f;    // px^2 added to the 2D covariance diagonal
    float alpha_cap = 0.99f;  // alpha = cap * exp(-q/2), so alpha <= cap everywhere
    float early_stop = 1e-4f; // stop compositing when transmittance drops below
    float sigma_cut = 3.f;    // bounding-box truncation radius in sigmas
    float near_plane = 0.05f; // m
};

/// Projected splat for inspection and tests.
struct Splat2D {
    Eigen::Vector2f mean;  // px
    Eigen::Matrix2f cov2d; // px^2, includes dilation
    Eigen::Vector3f color;
    float depth = 0.f;     // camera-space z
    int32_t point_index = -1;
};

/// Perspective projection of a GaussianSet: world pos = anchor + delta,
/// cov3d = R diag(s^2) R^T, cov2d = J W cov3d W^T J^T + dilation*I.
/// Output sorted by ascending depth (ties by point index); near-plane culled.
std::vector<Splat2D> project_gaussians(const GaussianSet& g, const geo::Camera& cam,
                                       const RasterSettings& settings = {});

namespace detail {

// Per-splat intermediates stashed by the forward pass for the backward sweep.
template <class T>
struct SplatFwd {
    int64_t idx;                 // original point index
    Eigen::Matrix<T, 3, 1> pc;   // camera-space position
    Eigen::Matrix<T, 2, 1> mean;
    Eigen::Matrix<T, 2, 2> inv;  // inverse 2D covariance
    Eigen::Matrix<T, 2, 3> J;
    Eigen::Matrix<T, 3, 3> M;    // camera-space 3D covariance
    Eigen::Matrix<T, 3, 3> R;    // anchor rotation
    Eigen::Matrix<T, 3, 1> sv;   // scales
    Eigen::Matrix<T, 3, 1> color;
    int x0, x1, y0, y1;
};

template <class T>
struct RenderStash {
    std::vector<SplatFwd<T>> splats; // depth order
    std::vector<T> out_rgb;          // H*W*3 final color incl. background
    std::vector<T> final_T;          // H*W
    Eigen::Matrix<T, 3, 3> W;        // world->camera rotation
    int width, height;
    T focal;
    RasterSettings settings;
};

template <class T>
std::shared_ptr<RenderStash<T>> render_forward(
    const std::vector<geo::Vec3>& anchors, const std::vector<Eigen::Matrix3f>& rotations,
    const TensorT<T>& delta, const TensorT<T>& scale, const TensorT<T>& color,
    const geo::Camera& cam, const Eigen::Vector3f& background, const RasterSettings& settings) {
    using V2 = Eigen::Matrix<T, 2, 1>;
    using V3 = Eigen::Matrix<T, 3, 1>;
    using M3 = Eigen::Matrix<T, 3, 3>;

    cam.validate();
    int64_t n = (int64_t)anchors.size();
    auto stash = std::make_shared<RenderStash<T>>();
    stash->W = cam.world_to_cam().template cast<T>();
    stash->width = cam.width;
    stash->height = cam.height;
    stash->focal = (T)cam.focal();
    stash->settings = settings;

    V3 campos = cam.position.cast<T>();
    T f = stash->focal;
    T cx = (T)0.5 * (T)cam.width, cy = (T)0.5 * (T)cam.height;
    const T qcut = (T)(settings.sigma_cut * settings.sigma_cut);

    stash->splats.reserve(n);
    for (int64_t i = 0; i < n; ++i) {
        V3 world = anchors[i].cast<T>() +
                   V3(delta.data[i * 3], delta.data[i * 3 + 1], delta.data[i * 3 + 2]);
        V3 pc = stash->W * (world - campos);
        if (pc.z() <= (T)settings.near_plane) continue; // culled

        SplatFwd<T> s;
        s.idx = i;
        s.pc = pc;
        s.mean = V2(cx + f * pc.x() / pc.z(), cy + f * pc.y() / pc.z());

        s.R = rotations[i].cast<T>();
        s.sv = V3(scale.data[i * 3], scale.data[i * 3 + 1], scale.data[i * 3 + 2]);
        M3 cov3d = s.R * s.sv.cwiseProduct(s.sv).asDiagonal() * s.R.transpose();
        s.M = stash->W * cov3d * stash->W.transpose();

        T z = pc.z();
        s.J.setZero();
        s.J(0, 0) = f / z;
        s.J(0, 2) = -f * pc.x() / (z * z);
        s.J(1, 1) = f / z;
        s.J(1, 2) = -f * pc.y() / (z * z);
        Eigen::Matrix<T, 2, 2> cov = s.J * s.M * s.J.transpose();
        cov(0, 0) += (T)settings.dilation;
        cov(1, 1) += (T)settings.dilation;

        T det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
        if (det <= (T)0)
            throw std::runtime_error("rasterizer: non-PSD 2D covariance after dilation");
        s.inv << cov(1, 1) / det, -cov(0, 1) / det, -cov(1, 0) / det, cov(0, 0) / det;

        T mid = (T)0.5 * (cov(0, 0) + cov(1, 1));
        T disc = std::sqrt(std::max((T)0, mid * mid - det));
        T radius = (T)settings.sigma_cut * std::sqrt(mid + disc);
        s.x0 = std::max(0, (int)std::floor((double)(s.mean.x() - radius)));
        s.x1 = std::min(cam.width, (int)std::ceil((double)(s.mean.x() + radius)) + 1);
        s.y0 = std::max(0, (int)std::floor((double)(s.mean.y() - radius)));
        s.y1 = std::min(cam.height, (int)std::ceil((double)(s.mean.y() + radius)) + 1);
        if (s.x0 >= s.x1 || s.y0 >= s.y1) continue;

        s.color = V3(color.data[i * 3], color.data[i * 3 + 1], color.data[i * 3 + 2]);
        stash->splats.push_back(s);
    }
    std::stable_sort(stash->splats.begin(), stash->splats.end(),
                     [](const SplatFwd<T>& a, const SplatFwd<T>& b) {
                         if (a.pc.z() != b.pc.z()) return a.pc.z() < b.pc.z();
                         return a.idx < b.idx;
                     });

    int64_t npx = (int64_t)cam.width * cam.height;
    stash->out_rgb.assign(npx * 3, (T)0);
    stash->final_T.assign(npx, (T)1);
    auto& Tr = stash->final_T;
    const T cap = (T)settings.alpha_cap;
    for (const auto& s : stash->splats) {
        for (int y = s.y0; y < s.y1; ++y) {
            for (int x = s.x0; x < s.x1; ++x) {
                int64_t px = (int64_t)y * cam.width + x;
                if (Tr[px] < (T)settings.early_stop) continue;
                V2 d((T)x + (T)0.5 - s.mean.x(), (T)y + (T)0.5 - s.mean.y());
                T q = d.dot(s.inv * d);
                if (q > qcut) continue;
                T a = cap * std::exp((T)-0.5 * q);
                for (int c = 0; c < 3; ++c) stash->out_rgb[px * 3 + c] += a * Tr[px] * s.color[c];
                Tr[px] *= ((T)1 - a);
            }
        }
    }
    V3 bg = background.cast<T>();
    for (int64_t px = 0; px < npx; ++px)
        for (int c = 0; c < 3; ++c) stash->out_rgb[px * 3 + c] += Tr[px] * bg[c];
    return stash;
}

// Gradients w.r.t. delta/scale/color given dL/dimage. Replays the forward
// traversal per pixel, then chains through the projection per splat.
template <class T>
void render_backward(const RenderStash<T>& stash, const TensorT<T>& grad_image,
                     TensorT<T>& gdelta, TensorT<T>& gscale, TensorT<T>& gcolor) {
    using V2 = Eigen::Matrix<T, 2, 1>;
    using V3 = Eigen::Matrix<T, 3, 1>;
    using M2 = Eigen::Matrix<T, 2, 2>;
    using M3 = Eigen::Matrix<T, 3, 3>;

    int w = stash.width, h = stash.height;
    const auto& st = stash.settings;
    const T cap = (T)st.alpha_cap;
    const T qcut = (T)(st.sigma_cut * st.sigma_cut);
    int64_t nsplat = (int64_t)stash.splats.size();
    std::vector<V2> dmean(nsplat, V2::Zero());
    std::vector<M2> dcov_acc(nsplat, M2::Zero());
    std::vector<V3> dcol(nsplat, V3::Zero());

    std::vector<T> Tr((size_t)w * h, (T)1);
    std::vector<T> prefix((size_t)w * h * 3, (T)0);
    for (int64_t si = 0; si < nsplat; ++si) {
        const auto& s = stash.splats[si];
        for (int y = s.y0; y < s.y1; ++y) {
            for (int x = s.x0; x < s.x1; ++x) {
                int64_t px = (int64_t)y * w + x;
                if (Tr[px] < (T)st.early_stop) continue;
                V2 d((T)x + (T)0.5 - s.mean.x(), (T)y + (T)0.5 - s.mean.y());
                T q = d.dot(s.inv * d);
                if (q > qcut) continue;
                T a = cap * std::exp((T)-0.5 * q);

                T dL_da = (T)0;
                for (int c = 0; c < 3; ++c) {
                    T g = grad_image.data[px * 3 + c];
                    dcol[si][c] += g * a * Tr[px];
                    prefix[px * 3 + c] += a * Tr[px] * s.color[c];
                    // suffix = contributions of later splats plus background
                    T suffix = stash.out_rgb[px * 3 + c] - prefix[px * 3 + c];
                    dL_da += g * (Tr[px] * s.color[c] - suffix / ((T)1 - a));
                }
                T dL_dq = dL_da * ((T)-0.5) * a;
                V2 Ad = s.inv * d;
                dmean[si] += dL_dq * (T)(-2) * Ad;       // dq/dmean = -2*inv*d... d = px-mean
                dcov_acc[si] -= dL_dq * (Ad * Ad.transpose()); // dq/dcov = -(inv d)(inv d)^T
                Tr[px] *= ((T)1 - a);
            }
        }
    }

    for (int64_t si = 0; si < nsplat; ++si) {
        const auto& s = stash.splats[si];
        int64_t i = s.idx;
        for (int c = 0; c < 3; ++c) gcolor.data[i * 3 + c] += dcol[si][c];

        M2 G = (T)0.5 * (dcov_acc[si] + dcov_acc[si].transpose());
        M3 dM = s.J.transpose() * G * s.J;
        Eigen::Matrix<T, 2, 3> dJ = (T)2 * G * s.J * s.M;

        V3 dpc = s.J.transpose() * dmean[si]; // dmean/dpc = J
        T f = stash.focal, x = s.pc.x(), y = s.pc.y(), z = s.pc.z();
        dpc.x() += dJ(0, 2) * (-f / (z * z));
        dpc.y() += dJ(1, 2) * (-f / (z * z));
        dpc.z() += (dJ(0, 0) + dJ(1, 1)) * (-f / (z * z)) +
                   dJ(0, 2) * ((T)2 * f * x / (z * z * z)) +
                   dJ(1, 2) * ((T)2 * f * y / (z * z * z));

        V3 dworld = stash.W.transpose() * dpc;
        for (int c = 0; c < 3; ++c) gdelta.data[i * 3 + c] += dworld[c];

        M3 dcov3d = stash.W.transpose() * dM * stash.W;
        M3 dD = s.R.transpose() * dcov3d * s.R;
        for (int c = 0; c < 3; ++c)
            gscale.data[i * 3 + c] += dD(c, c) * (T)2 * s.sv[c];
    }
}

} // namespace detail

/// Differentiable splat rendering. `delta`, `scale`, `color` are N x 3 vars;
/// anchors and rotations are fixed. Returns the H x W x 3 image as a var;
/// `alpha_out`, when given, receives the coverage (1 - final transmittance).
template <class T>
VarT<T> render(const VarT<T>& delta, const VarT<T>& scale, const VarT<T>& color,
               const std::vector<geo::Vec3>& anchors,
               const std::vector<Eigen::Matrix3f>& rotations, const geo::Camera& cam,
               const Eigen::Vector3f& background, const RasterSettings& settings = {},
               TensorT<T>* alpha_out = nullptr) {
    int64_t n = (int64_t)anchors.size();
    if (delta.value().numel() != n * 3 || scale.value().numel() != n * 3 ||
        color.value().numel() != n * 3)
        throw std::invalid_argument("render: parameter shapes must be N x 3");

    auto stash = detail::render_forward(anchors, rotations, delta.value(), scale.value(),
                                        color.value(), cam, background, settings);
    TensorT<T> img({(int64_t)cam.height, (int64_t)cam.width, 3});
    for (int64_t i = 0; i < img.numel(); ++i) img.data[i] = stash->out_rgb[i];
    if (alpha_out) {
        *alpha_out = TensorT<T>({(int64_t)cam.height, (int64_t)cam.width});
        for (int64_t i = 0; i < alpha_out->numel(); ++i)
            alpha_out->data[i] = (T)1 - stash->final_T[i];
    }

    return ad::make_op<T>(std::move(img), {delta, scale, color}, [stash, n](ad::NodeT<T>& node) {
        TensorT<T> gd({n, 3}), gs({n, 3}), gc({n, 3});
        detail::render_backward(*stash, node.grad, gd, gs, gc);
        if (node.parents[0]->requires_grad) node.parents[0]->accumulate(gd);
        if (node.parents[1]->requires_grad) node.parents[1]->accumulate(gs);
        if (node.parents[2]->requires_grad) node.parents[2]->accumulate(gc);
    });
}

/// Forward-only render to an Image (no tape).
Image render_image(const GaussianSet& g, const geo::Camera& cam,
                   const Eigen::Vector3f& background, const RasterSettings& settings = {});

} // namespace sg::raster

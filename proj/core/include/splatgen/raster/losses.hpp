#pragma once

#include "splatgen/ad/ops.hpp"
#include "splatgen/raster/image.hpp"

namespace sg::raster {

using ad::TensorT;
using ad::VarT;

namespace detail {

template <class T>
std::vector<T> gaussian_kernel_11(T sigma = (T)1.5) {
    std::vector<T> k(11);
    T sum = 0;
    for (int i = 0; i < 11; ++i) {
        T x = (T)(i - 5);
        k[i] = std::exp(-x * x / ((T)2 * sigma * sigma));
        sum += k[i];
    }
    for (auto& v : k) v /= sum;
    return k;
}

// Separable valid convolution of an H x W x C tensor with an odd 1D kernel.
template <class T>
TensorT<T> conv_valid(const TensorT<T>& img, const std::vector<T>& k) {
    int64_t H = img.dim(0), W = img.dim(1), C = img.dim(2);
    int64_t r = (int64_t)k.size() / 2;
    int64_t Ho = H - 2 * r, Wo = W - 2 * r;
    if (Ho <= 0 || Wo <= 0) throw std::invalid_argument("image smaller than SSIM window");
    TensorT<T> tmp({H, Wo, C});
    for (int64_t y = 0; y < H; ++y)
        for (int64_t x = 0; x < Wo; ++x)
            for (int64_t c = 0; c < C; ++c) {
                T acc = 0;
                for (int64_t u = 0; u < (int64_t)k.size(); ++u)
                    acc += k[u] * img.data[(y * W + x + u) * C + c];
                tmp.data[(y * Wo + x) * C + c] = acc;
            }
    TensorT<T> out({Ho, Wo, C});
    for (int64_t y = 0; y < Ho; ++y)
        for (int64_t x = 0; x < Wo; ++x)
            for (int64_t c = 0; c < C; ++c) {
                T acc = 0;
                for (int64_t u = 0; u < (int64_t)k.size(); ++u)
                    acc += k[u] * tmp.data[((y + u) * Wo + x) * C + c];
                out.data[(y * Wo + x) * C + c] = acc;
            }
    return out;
}

// Adjoint of conv_valid: zero-pad the gradient by the kernel radius and
// convolve with the flipped (== same, symmetric) kernel.
template <class T>
TensorT<T> conv_valid_adjoint(const TensorT<T>& grad, const std::vector<T>& k, int64_t H,
                              int64_t W) {
    int64_t r = (int64_t)k.size() / 2;
    int64_t Ho = grad.dim(0), Wo = grad.dim(1), C = grad.dim(2);
    TensorT<T> padded({H + 2 * r, W + 2 * r, C});
    for (int64_t y = 0; y < Ho; ++y)
        for (int64_t x = 0; x < Wo; ++x)
            for (int64_t c = 0; c < C; ++c)
                padded.data[((y + 2 * r) * (W + 2 * r) + x + 2 * r) * C + c] =
                    grad.data[(y * Wo + x) * C + c];
    return conv_valid(padded, k);
}

} // namespace detail

/// Differentiable 11x11 Gaussian windowing (sigma 1.5), valid region only.
template <class T>
VarT<T> ssim_window(const VarT<T>& img) {
    auto k = detail::gaussian_kernel_11<T>();
    int64_t H = img.value().dim(0), W = img.value().dim(1);
    auto val = detail::conv_valid(img.value(), k);
    return ad::make_op<T>(std::move(val), {img}, [k, H, W](ad::NodeT<T>& n) {
        n.parents[0]->accumulate(detail::conv_valid_adjoint(n.grad, k, H, W));
    });
}

/// Mean SSIM between prediction and target (H x W x 3 tensors), computed per
/// channel over the valid window region and averaged. Standard constants
/// C1=(0.01)^2, C2=(0.03)^2.
template <class T>
VarT<T> ssim(const VarT<T>& pred, const VarT<T>& target) {
    if (pred.shape() != target.shape()) throw std::invalid_argument("ssim: size mismatch");
    const T C1 = (T)1e-4, C2 = (T)9e-4;
    auto mu_x = ssim_window(pred);
    auto mu_y = ssim_window(target);
    auto sigma_x2 = ad::sub(ssim_window(ad::mul(pred, pred)), ad::mul(mu_x, mu_x));
    auto sigma_y2 = ad::sub(ssim_window(ad::mul(target, target)), ad::mul(mu_y, mu_y));
    auto sigma_xy = ad::sub(ssim_window(ad::mul(pred, target)), ad::mul(mu_x, mu_y));

    auto num = ad::mul(ad::add_scalar(ad::scale(ad::mul(mu_x, mu_y), (T)2), C1),
                       ad::add_scalar(ad::scale(sigma_xy, (T)2), C2));
    auto den = ad::mul(ad::add_scalar(ad::add(ad::mul(mu_x, mu_x), ad::mul(mu_y, mu_y)), C1),
                       ad::add_scalar(ad::add(sigma_x2, sigma_y2), C2));
    return ad::mean_all(ad::div(num, den));
}

/// loss = w_l1 * mean|pred-target| + w_ssim * (1 - SSIM(pred,target)).
template <class T>
VarT<T> render_loss(const VarT<T>& pred, const VarT<T>& target, T w_l1 = (T)1.0,
                    T w_ssim = (T)0.25) {
    if (pred.shape() != target.shape()) throw std::invalid_argument("render_loss: size mismatch");
    auto l1 = ad::mean_all(ad::abs_op(ad::sub(pred, target)));
    auto s = ssim(pred, target);
    auto dssim = ad::add_scalar(ad::neg(s), (T)1);
    return ad::add(ad::scale(l1, w_l1), ad::scale(dssim, w_ssim));
}

} // namespace sg::raster

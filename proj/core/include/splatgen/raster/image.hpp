#pragma once

#include "splatgen/ad/tensor.hpp"

#include <string>
#include <vector>

namespace sg::raster {

/// Linear-RGB image with coverage alpha, both in [0,1].
struct Image {
    int width = 0, height = 0;
    std::vector<float> rgb;   // H x W x 3
    std::vector<float> alpha; // H x W

    Image() = default;
    Image(int w, int h) : width(w), height(h), rgb((size_t)w * h * 3, 0.f),
                          alpha((size_t)w * h, 0.f) {}

    float& at(int y, int x, int c) { return rgb[((size_t)y * width + x) * 3 + c]; }
    float at(int y, int x, int c) const { return rgb[((size_t)y * width + x) * 3 + c]; }

    ad::Tensor tensor() const { return ad::Tensor({height, width, 3}, {rgb.begin(), rgb.end()}); }

    static Image from_tensor(const ad::Tensor& t);
};

float srgb_encode(float linear);
float srgb_decode(float code);

/// 8-bit sRGB PNG out; linearized on load.
void save_png(const Image& img, const std::string& path);
Image load_png(const std::string& path);

/// 10*log10(1/MSE) over RGB; +infinity for identical images.
double psnr(const Image& pred, const Image& target);

} // namespace sg::raster

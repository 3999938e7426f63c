#include "splatgen/raster/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace sg::raster {

Image Image::from_tensor(const ad::Tensor& t) {
    if (t.ndim() != 3 || t.dim(2) != 3) throw std::invalid_argument("image tensor must be HxWx3");
    Image img((int)t.dim(1), (int)t.dim(0));
    std::copy(t.data.begin(), t.data.end(), img.rgb.begin());
    return img;
}

float srgb_encode(float v) {
    v = std::min(std::max(v, 0.f), 1.f);
    return v <= 0.0031308f ? 12.92f * v : 1.055f * std::pow(v, 1.f / 2.4f) - 0.055f;
}

float srgb_decode(float v) {
    return v <= 0.04045f ? v / 12.92f : std::pow((v + 0.055f) / 1.055f, 2.4f);
}

void save_png(const Image& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        std::fclose(fp);
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write failure on " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row((size_t)img.width * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c)
                row[(size_t)x * 3 + c] =
                    (png_byte)std::lround(255.f * srgb_encode(img.at(y, x, c)));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Image load_png(const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        std::fclose(fp);
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("png read failure on " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    png_set_expand(png);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    int w = (int)png_get_image_width(png, info);
    int h = (int)png_get_image_height(png, info);
    Image img(w, h);
    std::vector<png_byte> row((size_t)w * 3);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c)
                img.at(y, x, c) = srgb_decode((float)row[(size_t)x * 3 + c] / 255.f);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return img;
}

double psnr(const Image& pred, const Image& target) {
    if (pred.width != target.width || pred.height != target.height)
        throw std::invalid_argument("psnr: size mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < pred.rgb.size(); ++i) {
        double d = (double)pred.rgb[i] - (double)target.rgb[i];
        mse += d * d;
    }
    mse /= (double)pred.rgb.size();
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

} // namespace sg::raster

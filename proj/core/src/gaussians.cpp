#include "splatgen/gaussians.hpp"

#include <stdexcept>

namespace sg {

ad::Tensor GaussianSet::pack_params() const {
    int64_t n = count();
    ad::Tensor out({n, 9});
    for (int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            out.data[i * 9 + c] = delta.data[i * 3 + c];
            out.data[i * 9 + 3 + c] = scale.data[i * 3 + c];
            out.data[i * 9 + 6 + c] = color.data[i * 3 + c];
        }
    return out;
}

void GaussianSet::unpack_params(const ad::Tensor& p) {
    int64_t n = count();
    if (p.shape != ad::Shape{n, 9}) throw std::invalid_argument("unpack_params: bad shape");
    delta = ad::Tensor({n, 3});
    scale = ad::Tensor({n, 3});
    color = ad::Tensor({n, 3});
    for (int64_t i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            delta.data[i * 3 + c] = p.data[i * 9 + c];
            scale.data[i * 3 + c] = p.data[i * 9 + 3 + c];
            color.data[i * 3 + c] = p.data[i * 9 + 6 + c];
        }
}

void GaussianSet::validate(const ConstraintRanges& ranges) const {
    int64_t n = count();
    if ((int64_t)rotations.size() != n || (int64_t)regions.size() != n ||
        delta.numel() != n * 3 || scale.numel() != n * 3 || color.numel() != n * 3)
        throw std::invalid_argument("GaussianSet field sizes disagree");
    const float tol = 1e-5f;
    for (int64_t i = 0; i < n; ++i) {
        float db = ranges.disp_bound(regions[i]);
        float sb = ranges.scale_bound(regions[i]);
        for (int c = 0; c < 3; ++c) {
            if (std::abs(delta.data[i * 3 + c]) > db + tol)
                throw std::invalid_argument("delta exceeds region bound");
            float s = scale.data[i * 3 + c];
            if (s < ranges.s_min - tol || s > sb + tol)
                throw std::invalid_argument("scale outside [s_min, bound]");
            float col = color.data[i * 3 + c];
            if (col < -tol || col > 1.f + tol)
                throw std::invalid_argument("color outside [0,1]");
        }
    }
}

} // namespace sg

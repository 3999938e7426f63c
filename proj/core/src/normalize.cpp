#include "splatgen/diffusion/normalize.hpp"

#include <limits>
#include <stdexcept>

namespace sg::diff {

void ParamStats::validate() const {
    for (int c = 0; c < 9; ++c)
        if (!(x_max[c] > x_min[c]))
            throw std::invalid_argument("ParamStats: x_max must exceed x_min (channel " +
                                        std::to_string(c) + ")");
}

ParamStats ParamStats::from_corpus(const std::vector<ad::Tensor>& corpus) {
    ParamStats s;
    s.x_min.fill(std::numeric_limits<float>::max());
    s.x_max.fill(std::numeric_limits<float>::lowest());
    for (const auto& t : corpus) {
        if (t.ndim() != 2 || t.dim(1) != 9)
            throw std::invalid_argument("param corpus entries must be N x 9");
        for (int64_t i = 0; i < t.dim(0); ++i)
            for (int c = 0; c < 9; ++c) {
                float v = t.data[i * 9 + c];
                s.x_min[c] = std::min(s.x_min[c], v);
                s.x_max[c] = std::max(s.x_max[c], v);
            }
    }
    // widen any flat channel so the formula stays defined
    for (int c = 0; c < 9; ++c)
        if (!(s.x_max[c] > s.x_min[c])) {
            s.x_min[c] -= 1e-4f;
            s.x_max[c] += 1e-4f;
        }
    s.validate();
    return s;
}

ad::Tensor normalize_params(const ad::Tensor& x, const ParamStats& stats, int64_t* clamped) {
    stats.validate();
    if (x.ndim() != 2 || x.dim(1) != 9) throw std::invalid_argument("normalize_params: N x 9");
    ad::Tensor out = x;
    int64_t nclamp = 0;
    for (int64_t i = 0; i < x.dim(0); ++i)
        for (int c = 0; c < 9; ++c) {
            float v = x.data[i * 9 + c];
            if (v < stats.x_min[c]) {
                v = stats.x_min[c];
                ++nclamp;
            } else if (v > stats.x_max[c]) {
                v = stats.x_max[c];
                ++nclamp;
            }
            out.data[i * 9 + c] =
                2.f * (v - stats.x_min[c]) / (stats.x_max[c] - stats.x_min[c]) - 1.f;
        }
    if (clamped) *clamped = nclamp;
    return out;
}

ad::Tensor denormalize_params(const ad::Tensor& x, const ParamStats& stats) {
    stats.validate();
    if (x.ndim() != 2 || x.dim(1) != 9) throw std::invalid_argument("denormalize_params: N x 9");
    ad::Tensor out = x;
    for (int64_t i = 0; i < x.dim(0); ++i)
        for (int c = 0; c < 9; ++c)
            out.data[i * 9 + c] = (x.data[i * 9 + c] + 1.f) / 2.f *
                                      (stats.x_max[c] - stats.x_min[c]) +
                                  stats.x_min[c];
    return out;
}

} // namespace sg::diff

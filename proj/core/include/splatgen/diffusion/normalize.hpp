#pragma once

#include "splatgen/ad/tensor.hpp"

#include <array>

namespace sg::diff {

/// Per-channel extremes of the 9 splat parameters [delta | scale | color],
/// driving the [-1,1] normalization.
struct ParamStats {
    std::array<float, 9> x_min{}, x_max{};

    void validate() const;

    /// Extremes over a corpus of N x 9 rows.
    static ParamStats from_corpus(const std::vector<ad::Tensor>& corpus);
};

/// 2*(x - x_min)/(x_max - x_min) - 1 per channel. Out-of-range inputs are
/// clamped; the clamp count is reported through `clamped` when given.
ad::Tensor normalize_params(const ad::Tensor& x, const ParamStats& stats,
                            int64_t* clamped = nullptr);

/// (x+1)/2 * (x_max - x_min) + x_min per channel.
ad::Tensor denormalize_params(const ad::Tensor& x, const ParamStats& stats);

} // namespace sg::diff

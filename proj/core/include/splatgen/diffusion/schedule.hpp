#pragma once

#include <cstdint>
#include <vector>

namespace sg::diff {

struct NoiseSchedule {
    int32_t T = 1000;
    std::vector<float> beta;      // 1-indexed conceptually; beta[t-1]
    std::vector<float> alpha;     // 1 - beta
    std::vector<float> alpha_bar; // cumulative product

    float beta_t(int32_t t) const { return beta[t - 1]; }
    float alpha_t(int32_t t) const { return alpha[t - 1]; }
    float alpha_bar_t(int32_t t) const { return t == 0 ? 1.f : alpha_bar[t - 1]; }
};

/// Linear beta interpolation beta_1..beta_T; cumulative products in 64-bit.
NoiseSchedule build_schedule(int32_t T, float beta_1, float beta_T);

} // namespace sg::diff

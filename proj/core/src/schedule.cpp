#include "splatgen/diffusion/schedule.hpp"

#include <stdexcept>

namespace sg::diff {

NoiseSchedule build_schedule(int32_t T, float beta_1, float beta_T) {
    if (T < 1) throw std::invalid_argument("build_schedule: T must be >= 1");
    if (!(0.f < beta_1 && beta_1 <= beta_T && beta_T < 1.f))
        throw std::invalid_argument("build_schedule: need 0 < beta_1 <= beta_T < 1");
    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double prod = 1.0;
    for (int32_t t = 0; t < T; ++t) {
        double b = T == 1 ? (double)beta_1
                          : (double)beta_1 + ((double)beta_T - (double)beta_1) * t / (T - 1);
        s.beta[t] = (float)b;
        s.alpha[t] = (float)(1.0 - b);
        prod *= (1.0 - b);
        s.alpha_bar[t] = (float)prod;
    }
    return s;
}

} // namespace sg::diff

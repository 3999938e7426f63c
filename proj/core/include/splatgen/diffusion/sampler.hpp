#pragma once

#include "splatgen/diffusion/denoiser.hpp"
#include "splatgen/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace sg::diff {

/// DDPM forward process: x_t = sqrt(abar_t) x0 + sqrt(1-abar_t) noise.
template <class T>
TensorT<T> q_sample(const TensorT<T>& x0, int32_t t, const TensorT<T>& noise,
                    const NoiseSchedule& sched) {
    if (t < 1 || t > sched.T) throw std::invalid_argument("q_sample: t out of [1,T]");
    if (noise.shape != x0.shape) throw std::invalid_argument("q_sample: noise shape mismatch");
    T a = (T)std::sqrt((double)sched.alpha_bar_t(t));
    T b = (T)std::sqrt(1.0 - (double)sched.alpha_bar_t(t));
    TensorT<T> out = x0;
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = a * x0.data[i] + b * noise.data[i];
    return out;
}

/// pred_x0 L2 objective for one (sample, timestep) draw. The caller decides
/// whether the condition was dropped (classifier-free training).
template <class T>
VarT<T> train_step_loss(const TensorT<T>& x0, int32_t t, const TensorT<T>& noise,
                        const TensorT<T>& cond_enc, const DenoiserGraphsT<T>& graphs,
                        DenoiserNetT<T>& net, const NoiseSchedule& sched) {
    auto x_t = VarT<T>::constant(q_sample(x0, t, noise, sched));
    auto x0_hat = denoiser_forward(x_t, t, cond_enc, graphs, net);
    auto diff = ad::sub(x0_hat, VarT<T>::constant(x0));
    return ad::mean_all(ad::square(diff));
}

template <class T>
TensorT<T> standard_normal_like(const ad::Shape& shape, Rng& rng) {
    TensorT<T> out(shape);
    for (int64_t i = 0; i < out.numel(); ++i) out.data[i] = (T)rng.normal();
    return out;
}

/// Classifier-free-guided ancestral sampler (x0-space guidance). Deterministic
/// given seed. Optionally records the three x0 predictions of the first step
/// for the guidance-affinity property test.
template <class T>
struct CfgStepProbe {
    TensorT<T> x0_u, x0_c, x0_guided; // pre-clamp, at t = T
};

template <class T>
TensorT<T> cfg_sample(DenoiserNetT<T>& net, const TensorT<T>& cond_enc, T w,
                      const NoiseSchedule& sched, uint64_t seed,
                      const DenoiserGraphsT<T>& graphs, CfgStepProbe<T>* probe = nullptr) {
    if (w < (T)0) throw std::invalid_argument("cfg_sample: guidance scale must be >= 0");
    if (net.reg.any_nonfinite())
        throw std::runtime_error("cfg_sample: non-finite denoiser weights, aborting");

    ad::NoGrad ng;
    Rng rng(seed);
    ad::Shape shape{graphs.count(0), net.cfg.channels};
    TensorT<T> null_enc({net.cfg.cond_dim});
    TensorT<T> x = standard_normal_like<T>(shape, rng);
    for (int32_t t = sched.T; t >= 1; --t) {
        auto xv = VarT<T>::constant(x);
        // at w=0 (resp. w=1) the conditional (unconditional) branch does not
        // contribute, so skip it unless the probe wants both predictions
        bool need_c = w != (T)0 || probe;
        bool need_u = w != (T)1 || probe;
        TensorT<T> x0_c = need_c ? denoiser_forward(xv, t, cond_enc, graphs, net).value()
                                 : TensorT<T>(shape);
        TensorT<T> x0_u = need_u ? denoiser_forward(xv, t, null_enc, graphs, net).value()
                                 : TensorT<T>(shape);
        TensorT<T> x0_hat(shape);
        if (w == (T)0)
            x0_hat = x0_u;
        else if (w == (T)1)
            x0_hat = x0_c;
        else
            for (int64_t i = 0; i < x0_hat.numel(); ++i)
                x0_hat.data[i] = x0_u.data[i] + w * (x0_c.data[i] - x0_u.data[i]);
        if (probe && t == sched.T) probe->x0_u = x0_u, probe->x0_c = x0_c, probe->x0_guided = x0_hat;
        for (auto& v : x0_hat.data) v = std::clamp(v, (T)-1, (T)1);

        double abar = sched.alpha_bar_t(t);
        double abar_prev = sched.alpha_bar_t(t - 1);
        double beta = sched.beta_t(t);
        double alpha = sched.alpha_t(t);
        double c0 = std::sqrt(abar_prev) * beta / (1.0 - abar);
        double ct = std::sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar);
        double sigma = t > 1 ? std::sqrt(beta * (1.0 - abar_prev) / (1.0 - abar)) : 0.0;
        for (int64_t i = 0; i < x.numel(); ++i) {
            double mu = c0 * x0_hat.data[i] + ct * x.data[i];
            double z = t > 1 ? (double)rng.normal() : 0.0;
            x.data[i] = (T)(mu + sigma * z);
        }
    }
    return x;
}

} // namespace sg::diff

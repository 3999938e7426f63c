#pragma once

#include "splatgen/ad/ops.hpp"

#include <stdexcept>

namespace sg::ad {

struct GradReport {
    double max_rel_error = 0.0;
    int64_t worst_index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Central-difference check of a scalar-valued function against its
/// reverse-mode gradient. Differences are accumulated in 64-bit.
template <class T, class F>
GradReport grad_check(F&& f, const TensorT<T>& x, T eps) {
    if (eps <= T(0)) throw std::invalid_argument("grad_check: eps must be positive");

    auto eval_scalar = [&](const TensorT<T>& pt, int64_t coord) -> double {
        NoGrad ng;
        auto v = f(VarT<T>::leaf(pt, false));
        double r = (double)v.value().data[0];
        if (!std::isfinite(r))
            throw std::runtime_error("grad_check: non-finite value at coordinate " +
                                     std::to_string(coord));
        return r;
    };

    // analytic gradient
    auto xv = VarT<T>::leaf(x, true);
    auto out = f(xv);
    if (out.value().numel() != 1) throw std::invalid_argument("grad_check: f must be scalar-valued");
    if (!std::isfinite((double)out.value().data[0]))
        throw std::runtime_error("grad_check: non-finite value at base point");
    backward(out);
    TensorT<T> analytic = xv.grad().numel() ? xv.grad() : TensorT<T>::zeros(x.shape);

    GradReport rep;
    TensorT<T> pt = x;
    for (int64_t i = 0; i < x.numel(); ++i) {
        T orig = pt.data[i];
        pt.data[i] = orig + eps;
        double fp = eval_scalar(pt, i);
        pt.data[i] = orig - eps;
        double fm = eval_scalar(pt, i);
        pt.data[i] = orig;
        double num = (fp - fm) / (2.0 * (double)eps);
        double ana = (double)analytic.data[i];
        double denom = std::max({std::abs(ana), std::abs(num), 1e-8});
        double rel = std::abs(ana - num) / denom;
        if (rel > rep.max_rel_error) {
            rep.max_rel_error = rel;
            rep.worst_index = i;
            rep.analytic = ana;
            rep.numeric = num;
        }
    }
    return rep;
}

} // namespace sg::ad

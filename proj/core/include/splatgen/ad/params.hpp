#pragma once

#include "splatgen/ad/ops.hpp"
#include "splatgen/rng.hpp"

#include <map>
#include <string>

namespace sg::ad {

/// Named trainable tensors. Leaf nodes persist across steps so optimizers
/// can read accumulated gradients after each backward sweep.
template <class T>
class ParamRegistry {
public:
    VarT<T> add(const std::string& name, TensorT<T> init) {
        if (map_.count(name)) throw std::invalid_argument("duplicate param " + name);
        auto v = VarT<T>::leaf(std::move(init), true);
        map_.emplace(name, v);
        return v;
    }

    VarT<T>& at(const std::string& name) {
        auto it = map_.find(name);
        if (it == map_.end()) throw std::out_of_range("no param " + name);
        return it->second;
    }
    const VarT<T>& at(const std::string& name) const {
        auto it = map_.find(name);
        if (it == map_.end()) throw std::out_of_range("no param " + name);
        return it->second;
    }
    bool has(const std::string& name) const { return map_.count(name) > 0; }

    void zero_grads() {
        for (auto& [k, v] : map_) v.zero_grad();
    }

    std::map<std::string, VarT<T>>& entries() { return map_; }
    const std::map<std::string, VarT<T>>& entries() const { return map_; }

    int64_t total_numel() const {
        int64_t n = 0;
        for (auto& [k, v] : map_) n += v.value().numel();
        return n;
    }

    bool any_nonfinite() const {
        for (auto& [k, v] : map_)
            if (!v.value().all_finite()) return true;
        return false;
    }

private:
    std::map<std::string, VarT<T>> map_;
};

// Glorot-style uniform init for a (fan_in, fan_out) matrix.
template <class T>
TensorT<T> glorot_init(int64_t fan_in, int64_t fan_out, Rng& rng) {
    T bound = (T)std::sqrt(6.0 / (double)(fan_in + fan_out));
    TensorT<T> w({fan_in, fan_out});
    for (auto& v : w.data) v = (T)rng.uniform(-(double)bound, (double)bound);
    return w;
}

/// Decoupled weight-decay Adam over a registry's parameters.
template <class T>
class AdamW {
public:
    explicit AdamW(ParamRegistry<T>& params, T lr = T(1e-3), T beta1 = T(0.9),
                   T beta2 = T(0.999), T eps = T(1e-8), T weight_decay = T(0))
        : params_(params), lr(lr), beta1(beta1), beta2(beta2), eps(eps),
          weight_decay(weight_decay) {}

    T lr, beta1, beta2, eps, weight_decay;

    void step() {
        ++t_;
        double bc1 = 1.0 - std::pow((double)beta1, (double)t_);
        double bc2 = 1.0 - std::pow((double)beta2, (double)t_);
        for (auto& [name, p] : params_.entries()) {
            auto node = p.node();
            if (node->grad.numel() == 0) continue;
            auto& m = m_[name];
            auto& v = v_[name];
            if (m.numel() == 0) {
                m = TensorT<T>::zeros(node->value.shape);
                v = TensorT<T>::zeros(node->value.shape);
            }
            for (int64_t i = 0; i < node->value.numel(); ++i) {
                T g = node->grad.data[i];
                m.data[i] = beta1 * m.data[i] + (T(1) - beta1) * g;
                v.data[i] = beta2 * v.data[i] + (T(1) - beta2) * g * g;
                T mh = (T)((double)m.data[i] / bc1);
                T vh = (T)((double)v.data[i] / bc2);
                node->value.data[i] -= lr * (mh / (std::sqrt(vh) + eps) +
                                             weight_decay * node->value.data[i]);
            }
        }
    }

private:
    ParamRegistry<T>& params_;
    int64_t t_ = 0;
    std::map<std::string, TensorT<T>> m_, v_;
};

} // namespace sg::ad

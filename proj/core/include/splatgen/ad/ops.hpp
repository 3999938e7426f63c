#pragma once

#include "splatgen/ad/graph.hpp"

namespace sg::ad {

template <class T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
    auto val = broadcast_binary(a.value(), b.value(), [](T x, T y) { return x + y; });
    return make_op<T>(std::move(val), {a, b}, [](NodeT<T>& n) {
        if (n.parents[0]->requires_grad)
            n.parents[0]->accumulate(reduce_to_shape(n.grad, n.parents[0]->value.shape));
        if (n.parents[1]->requires_grad)
            n.parents[1]->accumulate(reduce_to_shape(n.grad, n.parents[1]->value.shape));
    });
}

template <class T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b) {
    auto val = broadcast_binary(a.value(), b.value(), [](T x, T y) { return x - y; });
    return make_op<T>(std::move(val), {a, b}, [](NodeT<T>& n) {
        if (n.parents[0]->requires_grad)
            n.parents[0]->accumulate(reduce_to_shape(n.grad, n.parents[0]->value.shape));
        if (n.parents[1]->requires_grad) {
            auto g = n.grad;
            for (auto& v : g.data) v = -v;
            n.parents[1]->accumulate(reduce_to_shape(g, n.parents[1]->value.shape));
        }
    });
}

template <class T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
    auto val = broadcast_binary(a.value(), b.value(), [](T x, T y) { return x * y; });
    return make_op<T>(std::move(val), {a, b}, [](NodeT<T>& n) {
        if (n.parents[0]->requires_grad) {
            auto g = broadcast_binary(n.grad, n.parents[1]->value, [](T g_, T y) { return g_ * y; });
            n.parents[0]->accumulate(reduce_to_shape(g, n.parents[0]->value.shape));
        }
        if (n.parents[1]->requires_grad) {
            auto g = broadcast_binary(n.grad, n.parents[0]->value, [](T g_, T x) { return g_ * x; });
            n.parents[1]->accumulate(reduce_to_shape(g, n.parents[1]->value.shape));
        }
    });
}

template <class T>
VarT<T> div(const VarT<T>& a, const VarT<T>& b) {
    auto val = broadcast_binary(a.value(), b.value(), [](T x, T y) { return x / y; });
    return make_op<T>(std::move(val), {a, b}, [](NodeT<T>& n) {
        if (n.parents[0]->requires_grad) {
            auto g = broadcast_binary(n.grad, n.parents[1]->value, [](T g_, T y) { return g_ / y; });
            n.parents[0]->accumulate(reduce_to_shape(g, n.parents[0]->value.shape));
        }
        if (n.parents[1]->requires_grad) {
            auto q = broadcast_binary(n.value, n.parents[1]->value, [](T v, T y) { return -v / y; });
            auto g = broadcast_binary(n.grad, q, [](T g_, T q_) { return g_ * q_; });
            n.parents[1]->accumulate(reduce_to_shape(g, n.parents[1]->value.shape));
        }
    });
}

template <class T>
VarT<T> scale(const VarT<T>& a, T s) {
    auto val = a.value();
    for (auto& v : val.data) v *= s;
    return make_op<T>(std::move(val), {a}, [s](NodeT<T>& n) {
        auto g = n.grad;
        for (auto& v : g.data) v *= s;
        n.parents[0]->accumulate(g);
    });
}

template <class T>
VarT<T> add_scalar(const VarT<T>& a, T s) {
    auto val = a.value();
    for (auto& v : val.data) v += s;
    return make_op<T>(std::move(val), {a},
                      [](NodeT<T>& n) { n.parents[0]->accumulate(n.grad); });
}

template <class T, class FwdF, class DerivF>
VarT<T> unary_op(const VarT<T>& a, FwdF fwd, DerivF deriv) {
    auto val = a.value();
    for (auto& v : val.data) v = fwd(v);
    return make_op<T>(std::move(val), {a}, [deriv](NodeT<T>& n) {
        TensorT<T> g(n.value.shape);
        const auto& x = n.parents[0]->value;
        for (int64_t i = 0; i < g.numel(); ++i)
            g.data[i] = n.grad.data[i] * deriv(x.data[i], n.value.data[i]);
        n.parents[0]->accumulate(g);
    });
}

// deriv callbacks receive (x, fx)
template <class T>
VarT<T> neg(const VarT<T>& a) {
    return unary_op(a, [](T x) { return -x; }, [](T, T) { return T(-1); });
}
template <class T>
VarT<T> sigmoid(const VarT<T>& a) {
    return unary_op(a, [](T x) { return T(1) / (T(1) + std::exp(-x)); },
                    [](T, T f) { return f * (T(1) - f); });
}
template <class T>
VarT<T> sin_op(const VarT<T>& a) {
    return unary_op(a, [](T x) { return std::sin(x); }, [](T x, T) { return std::cos(x); });
}
template <class T>
VarT<T> exp_op(const VarT<T>& a) {
    return unary_op(a, [](T x) { return std::exp(x); }, [](T, T f) { return f; });
}
template <class T>
VarT<T> log_op(const VarT<T>& a) {
    return unary_op(a, [](T x) { return std::log(x); }, [](T x, T) { return T(1) / x; });
}
template <class T>
VarT<T> sqrt_op(const VarT<T>& a) {
    return unary_op(a, [](T x) { return std::sqrt(x); },
                    [](T, T f) { return T(0.5) / f; });
}
template <class T>
VarT<T> abs_op(const VarT<T>& a) {
    return unary_op(a, [](T x) { return std::abs(x); },
                    [](T x, T) { return x >= T(0) ? T(1) : T(-1); });
}
template <class T>
VarT<T> square(const VarT<T>& a) {
    return unary_op(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}
template <class T>
VarT<T> silu(const VarT<T>& a) {
    return mul(a, sigmoid(a));
}

template <class T>
VarT<T> reshape(const VarT<T>& a, Shape s) {
    auto val = a.value().reshaped(std::move(s));
    return make_op<T>(std::move(val), {a}, [](NodeT<T>& n) {
        n.parents[0]->accumulate(n.grad.reshaped(n.parents[0]->value.shape));
    });
}

template <class T>
VarT<T> matmul(const VarT<T>& a, const VarT<T>& b) {
    auto val = tensor_matmul(a.value(), b.value());
    return make_op<T>(std::move(val), {a, b}, [](NodeT<T>& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            auto ga = tensor_matmul(n.grad, tensor_transpose_last2(bv));
            n.parents[0]->accumulate(reduce_to_shape(ga, av.shape));
        }
        if (n.parents[1]->requires_grad) {
            auto gb = tensor_matmul(tensor_transpose_last2(av), n.grad);
            n.parents[1]->accumulate(reduce_to_shape(gb, bv.shape));
        }
    });
}

template <class T>
VarT<T> transpose_last2(const VarT<T>& a) {
    auto val = tensor_transpose_last2(a.value());
    return make_op<T>(std::move(val), {a}, [](NodeT<T>& n) {
        n.parents[0]->accumulate(tensor_transpose_last2(n.grad));
    });
}

/// Numerically stable softmax over the last dimension.
template <class T>
VarT<T> softmax_last(const VarT<T>& a) {
    auto val = a.value();
    int64_t c = val.dim(-1);
    int64_t rows = val.numel() / c;
    for (int64_t r = 0; r < rows; ++r) {
        T* p = val.data.data() + r * c;
        T mx = p[0];
        for (int64_t i = 1; i < c; ++i) mx = std::max(mx, p[i]);
        T sum = 0;
        for (int64_t i = 0; i < c; ++i) {
            p[i] = std::exp(p[i] - mx);
            sum += p[i];
        }
        for (int64_t i = 0; i < c; ++i) p[i] /= sum;
    }
    return make_op<T>(std::move(val), {a}, [](NodeT<T>& n) {
        int64_t c = n.value.dim(-1);
        int64_t rows = n.value.numel() / c;
        TensorT<T> g(n.value.shape);
        for (int64_t r = 0; r < rows; ++r) {
            const T* y = n.value.data.data() + r * c;
            const T* dy = n.grad.data.data() + r * c;
            T dot = 0;
            for (int64_t i = 0; i < c; ++i) dot += y[i] * dy[i];
            T* gp = g.data.data() + r * c;
            for (int64_t i = 0; i < c; ++i) gp[i] = y[i] * (dy[i] - dot);
        }
        n.parents[0]->accumulate(g);
    });
}

template <class T>
VarT<T> sum_all(const VarT<T>& a) {
    T s = 0;
    for (T v : a.value().data) s += v;
    return make_op<T>(TensorT<T>::scalar(s), {a}, [](NodeT<T>& n) {
        n.parents[0]->accumulate(TensorT<T>::full(n.parents[0]->value.shape, n.grad.data[0]));
    });
}

template <class T>
VarT<T> mean_all(const VarT<T>& a) {
    return scale(sum_all(a), T(1) / (T)a.value().numel());
}

/// Sum over one axis (removed from the shape).
template <class T>
VarT<T> sum_axis(const VarT<T>& a, int axis) {
    const auto& v = a.value();
    int nd = v.ndim();
    if (axis < 0) axis += nd;
    Shape os;
    for (int i = 0; i < nd; ++i)
        if (i != axis) os.push_back(v.shape[i]);
    if (os.empty()) os.push_back(1);
    int64_t outer = 1, axlen = v.shape[axis], inner = 1;
    for (int i = 0; i < axis; ++i) outer *= v.shape[i];
    for (int i = axis + 1; i < nd; ++i) inner *= v.shape[i];
    TensorT<T> out(os);
    for (int64_t o = 0; o < outer; ++o)
        for (int64_t x = 0; x < axlen; ++x)
            for (int64_t i = 0; i < inner; ++i)
                out.data[o * inner + i] += v.data[(o * axlen + x) * inner + i];
    return make_op<T>(std::move(out), {a}, [axis](NodeT<T>& n) {
        const auto& ps = n.parents[0]->value.shape;
        int nd = (int)ps.size();
        int64_t outer = 1, axlen = ps[axis], inner = 1;
        for (int i = 0; i < axis; ++i) outer *= ps[i];
        for (int i = axis + 1; i < nd; ++i) inner *= ps[i];
        TensorT<T> g(ps);
        for (int64_t o = 0; o < outer; ++o)
            for (int64_t x = 0; x < axlen; ++x)
                for (int64_t i = 0; i < inner; ++i)
                    g.data[(o * axlen + x) * inner + i] = n.grad.data[o * inner + i];
        n.parents[0]->accumulate(g);
    });
}

template <class T>
VarT<T> mean_axis(const VarT<T>& a, int axis) {
    int nd = a.value().ndim();
    int ax = axis < 0 ? axis + nd : axis;
    return scale(sum_axis(a, axis), T(1) / (T)a.value().shape[ax]);
}

/// Row gather on the first axis: x is (R, inner...), idx values in [0,R).
/// Output shape: (idx.size(), inner...).
template <class T>
VarT<T> gather_rows(const VarT<T>& a, std::vector<int64_t> idx) {
    const auto& v = a.value();
    int64_t rows = v.shape[0];
    int64_t inner = v.numel() / rows;
    for (int64_t i : idx)
        if (i < 0 || i >= rows) throw std::invalid_argument("gather index out of range");
    Shape os = v.shape;
    os[0] = (int64_t)idx.size();
    TensorT<T> out(os);
    for (size_t r = 0; r < idx.size(); ++r)
        std::copy_n(v.data.data() + idx[r] * inner, inner, out.data.data() + (int64_t)r * inner);
    return make_op<T>(std::move(out), {a}, [idx = std::move(idx), inner](NodeT<T>& n) {
        TensorT<T> g(n.parents[0]->value.shape);
        for (size_t r = 0; r < idx.size(); ++r) {
            const T* src = n.grad.data.data() + (int64_t)r * inner;
            T* dst = g.data.data() + idx[r] * inner;
            for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
        }
        n.parents[0]->accumulate(g);
    });
}

/// Concatenate along the last axis.
template <class T>
VarT<T> concat_last(const std::vector<VarT<T>>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat of nothing");
    Shape base = parts[0].shape();
    int64_t total = 0;
    std::vector<int64_t> widths;
    for (auto& p : parts) {
        widths.push_back(p.value().dim(-1));
        total += widths.back();
    }
    Shape os = base;
    os.back() = total;
    int64_t rows = shape_numel(os) / total;
    TensorT<T> out(os);
    int64_t off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
        const auto& v = parts[pi].value();
        int64_t w = widths[pi];
        for (int64_t r = 0; r < rows; ++r)
            std::copy_n(v.data.data() + r * w, w, out.data.data() + r * total + off);
        off += w;
    }
    return make_op<T>(std::move(out), parts, [widths, total, rows](NodeT<T>& n) {
        int64_t off = 0;
        for (size_t pi = 0; pi < n.parents.size(); ++pi) {
            int64_t w = widths[pi];
            if (n.parents[pi]->requires_grad) {
                TensorT<T> g(n.parents[pi]->value.shape);
                for (int64_t r = 0; r < rows; ++r)
                    std::copy_n(n.grad.data.data() + r * total + off, w, g.data.data() + r * w);
                n.parents[pi]->accumulate(g);
            }
            off += w;
        }
    });
}

/// Slice [start, start+len) of the last axis.
template <class T>
VarT<T> slice_last(const VarT<T>& a, int64_t start, int64_t len) {
    const auto& v = a.value();
    int64_t w = v.dim(-1);
    if (start < 0 || start + len > w) throw std::invalid_argument("slice out of range");
    Shape os = v.shape;
    os.back() = len;
    int64_t rows = v.numel() / w;
    TensorT<T> out(os);
    for (int64_t r = 0; r < rows; ++r)
        std::copy_n(v.data.data() + r * w + start, len, out.data.data() + r * len);
    return make_op<T>(std::move(out), {a}, [start, len, w, rows](NodeT<T>& n) {
        TensorT<T> g(n.parents[0]->value.shape);
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t i = 0; i < len; ++i)
                g.data[r * w + start + i] = n.grad.data[r * len + i];
        n.parents[0]->accumulate(g);
    });
}

template <class T>
TensorT<T> tensor_permute(const TensorT<T>& a, const std::vector<int>& axes) {
    int nd = a.ndim();
    if ((int)axes.size() != nd) throw std::invalid_argument("permute axes size mismatch");
    Shape os(nd);
    for (int i = 0; i < nd; ++i) os[i] = a.shape[axes[i]];
    std::vector<int64_t> in_strides(nd, 1);
    for (int i = nd - 2; i >= 0; --i) in_strides[i] = in_strides[i + 1] * a.shape[i + 1];
    std::vector<int64_t> strides(nd);
    for (int i = 0; i < nd; ++i) strides[i] = in_strides[axes[i]];
    TensorT<T> out(os);
    std::vector<int64_t> idx(nd, 0);
    int64_t src = 0;
    for (int64_t o = 0; o < out.numel(); ++o) {
        out.data[o] = a.data[src];
        for (int d = nd - 1; d >= 0; --d) {
            idx[d]++;
            src += strides[d];
            if (idx[d] < os[d]) break;
            idx[d] = 0;
            src -= strides[d] * os[d];
        }
    }
    return out;
}

/// Arbitrary axis permutation.
template <class T>
VarT<T> permute(const VarT<T>& a, std::vector<int> axes) {
    auto val = tensor_permute(a.value(), axes);
    return make_op<T>(std::move(val), {a}, [axes](NodeT<T>& n) {
        std::vector<int> inv(axes.size());
        for (size_t i = 0; i < axes.size(); ++i) inv[axes[i]] = (int)i;
        n.parents[0]->accumulate(tensor_permute(n.grad, inv));
    });
}

/// y = x @ W + b, with x (.., in), W (in, out), b (out).
template <class T>
VarT<T> linear(const VarT<T>& x, const VarT<T>& W, const VarT<T>& b) {
    return add(matmul(x, W), b);
}

/// Layer normalization over the last axis with learned gain/bias.
template <class T>
VarT<T> layer_norm(const VarT<T>& x, const VarT<T>& gain, const VarT<T>& bias, T eps = T(1e-5)) {
    auto mu = mean_axis(x, -1);
    Shape ks = x.shape();
    ks.back() = 1;
    auto mu_k = reshape(mu, ks);
    auto centered = sub(x, mu_k);
    auto var = reshape(mean_axis(square(centered), -1), ks);
    auto inv = div(VarT<T>::constant(TensorT<T>::full(ks, T(1))), sqrt_op(add_scalar(var, eps)));
    return add(mul(mul(centered, inv), gain), bias);
}

} // namespace sg::ad

#pragma once

#include <Eigen/Dense>

#include <cassert>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace sg::ad {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        out += std::to_string(s[i]);
        if (i + 1 < s.size()) out += ",";
    }
    return out + "]";
}

/// Dense row-major tensor. Broadcasting stretches size-1 dimensions only;
/// matmul and transpose act on the last two dimensions.
template <class T>
struct TensorT {
    Shape shape;
    std::vector<T> data;

    TensorT() = default;
    explicit TensorT(Shape s) : shape(std::move(s)), data(shape_numel(shape), T(0)) {}
    TensorT(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        if ((int64_t)data.size() != shape_numel(shape))
            throw std::invalid_argument("tensor data size does not match shape " + shape_str(shape));
    }

    static TensorT zeros(Shape s) { return TensorT(std::move(s)); }
    static TensorT full(Shape s, T v) {
        TensorT t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static TensorT scalar(T v) { return TensorT({1}, {v}); }

    int64_t numel() const { return (int64_t)data.size(); }
    int64_t dim(int i) const {
        int n = (int)shape.size();
        if (i < 0) i += n;
        return shape[i];
    }
    int ndim() const { return (int)shape.size(); }

    T& operator[](int64_t i) { return data[(size_t)i]; }
    const T& operator[](int64_t i) const { return data[(size_t)i]; }

    TensorT reshaped(Shape s) const {
        if (shape_numel(s) != numel())
            throw std::invalid_argument("reshape " + shape_str(shape) + " -> " + shape_str(s));
        TensorT out = *this;
        out.shape = std::move(s);
        return out;
    }

    template <class U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (size_t i = 0; i < data.size(); ++i) out.data[i] = (U)data[i];
        return out;
    }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite((double)v)) return false;
        return true;
    }
};

// Right-aligned broadcast of two shapes; throws on incompatible dims.
inline Shape broadcast_shape(const Shape& a, const Shape& b) {
    int na = (int)a.size(), nb = (int)b.size(), n = std::max(na, nb);
    Shape out(n);
    for (int i = 0; i < n; ++i) {
        int64_t da = i < n - na ? 1 : a[i - (n - na)];
        int64_t db = i < n - nb ? 1 : b[i - (n - nb)];
        if (da != db && da != 1 && db != 1)
            throw std::invalid_argument("broadcast mismatch " + shape_str(a) + " vs " + shape_str(b));
        out[i] = std::max(da, db);
    }
    return out;
}

// Row-major strides with 0 in place of broadcast (size-1) dims, aligned to `out`.
inline std::vector<int64_t> broadcast_strides(const Shape& s, const Shape& out) {
    int n = (int)out.size(), ns = (int)s.size();
    std::vector<int64_t> strides(n, 0);
    int64_t acc = 1;
    for (int i = ns - 1; i >= 0; --i) {
        int oi = i + (n - ns);
        strides[oi] = (s[i] == 1) ? 0 : acc;
        acc *= s[i];
    }
    for (int i = 0; i < n - ns; ++i) strides[i] = 0;
    return strides;
}

// Apply fn(a_i, b_i) elementwise under broadcasting.
template <class T, class F>
TensorT<T> broadcast_binary(const TensorT<T>& a, const TensorT<T>& b, F&& fn) {
    if (a.shape == b.shape) {
        TensorT<T> out(a.shape);
        for (int64_t i = 0; i < a.numel(); ++i) out.data[i] = fn(a.data[i], b.data[i]);
        return out;
    }
    Shape os = broadcast_shape(a.shape, b.shape);
    TensorT<T> out(os);
    auto sa = broadcast_strides(a.shape, os);
    auto sb = broadcast_strides(b.shape, os);
    int n = (int)os.size();
    std::vector<int64_t> idx(n, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t o = 0; o < out.numel(); ++o) {
        out.data[o] = fn(a.data[ia], b.data[ib]);
        for (int d = n - 1; d >= 0; --d) {
            idx[d]++;
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < os[d]) break;
            idx[d] = 0;
            ia -= sa[d] * os[d];
            ib -= sb[d] * os[d];
        }
    }
    return out;
}

// Sum `g` (shaped like `out`) back down to `target` shape: reduction over
// dimensions that were broadcast. Used by backward passes of elementwise ops.
template <class T>
TensorT<T> reduce_to_shape(const TensorT<T>& g, const Shape& target) {
    if (g.shape == target) return g;
    Shape os = g.shape;
    TensorT<T> out(target);
    auto st = broadcast_strides(target, os);
    int n = (int)os.size();
    std::vector<int64_t> idx(n, 0);
    int64_t it = 0;
    for (int64_t o = 0; o < g.numel(); ++o) {
        out.data[it] += g.data[o];
        for (int d = n - 1; d >= 0; --d) {
            idx[d]++;
            it += st[d];
            if (idx[d] < os[d]) break;
            idx[d] = 0;
            it -= st[d] * os[d];
        }
    }
    return out;
}

// Batched matmul over the last two dims; leading dims broadcast.
template <class T>
TensorT<T> tensor_matmul(const TensorT<T>& a, const TensorT<T>& b) {
    using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    using CMap = Eigen::Map<const Mat>;
    using MMap = Eigen::Map<Mat>;
    if (a.ndim() < 2 || b.ndim() < 2)
        throw std::invalid_argument("matmul needs >=2 dims");
    int64_t m = a.dim(-2), ka = a.dim(-1), kb = b.dim(-2), p = b.dim(-1);
    if (ka != kb)
        throw std::invalid_argument("matmul inner mismatch " + shape_str(a.shape) + " x " + shape_str(b.shape));
    Shape la(a.shape.begin(), a.shape.end() - 2), lb(b.shape.begin(), b.shape.end() - 2);
    Shape lead = broadcast_shape(la, lb);
    Shape os = lead;
    os.push_back(m);
    os.push_back(p);
    TensorT<T> out(os);
    int64_t nbatch = shape_numel(lead);
    auto sa = broadcast_strides(la, lead);
    auto sb = broadcast_strides(lb, lead);
    int nl = (int)lead.size();
    std::vector<int64_t> idx(nl, 0);
    int64_t ia = 0, ib = 0;
    for (int64_t bi = 0; bi < nbatch; ++bi) {
        CMap ma(a.data.data() + ia * m * ka, m, ka);
        CMap mb(b.data.data() + ib * kb * p, kb, p);
        MMap mo(out.data.data() + bi * m * p, m, p);
        mo.noalias() = ma * mb;
        for (int d = nl - 1; d >= 0; --d) {
            idx[d]++;
            ia += sa[d];
            ib += sb[d];
            if (idx[d] < lead[d]) break;
            idx[d] = 0;
            ia -= sa[d] * lead[d];
            ib -= sb[d] * lead[d];
        }
    }
    return out;
}

// Transpose of the last two dimensions (materialized).
template <class T>
TensorT<T> tensor_transpose_last2(const TensorT<T>& a) {
    if (a.ndim() < 2) throw std::invalid_argument("transpose needs >=2 dims");
    Shape os = a.shape;
    std::swap(os[os.size() - 1], os[os.size() - 2]);
    TensorT<T> out(os);
    int64_t r = a.dim(-2), c = a.dim(-1);
    int64_t nbatch = a.numel() / (r * c);
    for (int64_t b = 0; b < nbatch; ++b) {
        const T* src = a.data.data() + b * r * c;
        T* dst = out.data.data() + b * r * c;
        for (int64_t i = 0; i < r; ++i)
            for (int64_t j = 0; j < c; ++j) dst[j * r + i] = src[i * c + j];
    }
    return out;
}

using Tensor = TensorT<float>;

} // namespace sg::ad

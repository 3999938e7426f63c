#pragma once

#include "splatgen/ad/params.hpp"
#include "splatgen/attention/attention.hpp"
#include "splatgen/gaussians.hpp"

namespace sg::heads {

using ad::TensorT;
using ad::VarT;

template <class T>
struct RegressionWeights {
    VarT<T> W, b; // f -> 9 raw outputs
};

template <class T>
RegressionWeights<T> make_regression_weights(ad::ParamRegistry<T>& reg, const std::string& prefix,
                                             int64_t feature_dim, Rng& rng) {
    return {reg.add(prefix + ".W", ad::glorot_init<T>(feature_dim, 9, rng)),
            reg.add(prefix + ".b", TensorT<T>::zeros({9}))};
}

template <class T>
struct GaussianHeads {
    VarT<T> delta, scale, color; // each N x 3, bounded by construction
};

/// Raw N x 9 outputs mapped into their constrained ranges:
///   color  = sigmoid(raw)
///   delta  = disp_bound(region) * sin(raw)
///   scale  = s_min + (scale_bound(region) - s_min) * (sin(raw)+1)/2
template <class T>
GaussianHeads<T> constrain_outputs(const VarT<T>& raw /* N x 9 */,
                                   const std::vector<geo::Region>& regions,
                                   const ConstraintRanges& ranges) {
    ranges.validate();
    int64_t n = raw.value().dim(0);
    if (raw.value().dim(-1) != 9)
        throw std::invalid_argument("constrain_outputs: expected N x 9 raw inputs");
    if ((int64_t)regions.size() != n)
        throw std::invalid_argument("constrain_outputs: region labels != point count");
    for (auto r : regions)
        if ((int)r < 0 || (int)r > 2) throw std::invalid_argument("unknown region label");

    auto raw_c = ad::slice_last(raw, 6, 3);
    auto raw_d = ad::slice_last(raw, 0, 3);
    auto raw_s = ad::slice_last(raw, 3, 3);

    TensorT<T> disp_b({n, 1}), scale_span({n, 1});
    for (int64_t i = 0; i < n; ++i) {
        disp_b.data[i] = (T)ranges.disp_bound(regions[i]);
        scale_span.data[i] = (T)(ranges.scale_bound(regions[i]) - ranges.s_min);
    }
    GaussianHeads<T> out;
    out.color = ad::sigmoid(raw_c);
    out.delta = ad::mul(VarT<T>::constant(disp_b), ad::sin_op(raw_d));
    auto unit = ad::scale(ad::add_scalar(ad::sin_op(raw_s), T(1)), T(0.5)); // in [0,1]
    out.scale = ad::add_scalar(ad::mul(VarT<T>::constant(scale_span), unit), (T)ranges.s_min);
    return out;
}

/// Linear regression head followed by the bounded constraint mapping.
template <class T>
GaussianHeads<T> regress_gaussians(const VarT<T>& FX /* N x f */,
                                   const std::vector<geo::Region>& regions,
                                   const ConstraintRanges& ranges,
                                   const RegressionWeights<T>& w) {
    return constrain_outputs(ad::linear(FX, w.W, w.b), regions, ranges);
}

template <class T>
struct ShapeMlpWeights {
    VarT<T> W1, b1, W2, b2;
};

template <class T>
ShapeMlpWeights<T> make_shape_mlp(ad::ParamRegistry<T>& reg, const std::string& prefix,
                                  int64_t in_dim, int64_t hidden, int64_t out_dim, Rng& rng) {
    return {reg.add(prefix + ".W1", ad::glorot_init<T>(in_dim, hidden, rng)),
            reg.add(prefix + ".b1", TensorT<T>::zeros({hidden})),
            reg.add(prefix + ".W2", ad::glorot_init<T>(hidden, out_dim, rng)),
            reg.add(prefix + ".b2", TensorT<T>::zeros({out_dim}))};
}

template <class T>
VarT<T> shape_mlp(const VarT<T>& input /* 1 x in */, const ShapeMlpWeights<T>& w) {
    auto h = ad::silu(ad::linear(input, w.W1, w.b1));
    return ad::linear(h, w.W2, w.b2);
}

/// Beta from the feature grid: mean over cells (length C) concatenated with
/// the mean over channels (length H'*W'), through a 2-layer perceptron.
template <class T>
VarT<T> predict_shape(const attn::FeatureGridT<T>& dims, const VarT<T>& grid /* M x C */,
                      const ShapeMlpWeights<T>& w) {
    int64_t M = dims.cells(), C = dims.channels;
    auto v1 = ad::reshape(ad::mean_axis(grid, 0), {(int64_t)1, C});
    auto v2 = ad::reshape(ad::mean_axis(grid, -1), {(int64_t)1, M});
    auto input = ad::concat_last<T>({v1, v2}); // 1 x (C + M)
    return shape_mlp(input, w);
}

/// Beta straight from a text/condition encoding (text-twin variant).
template <class T>
VarT<T> predict_shape_from_text(const VarT<T>& embedding /* 1 x E */,
                                const ShapeMlpWeights<T>& w) {
    return shape_mlp(embedding, w);
}

} // namespace sg::heads

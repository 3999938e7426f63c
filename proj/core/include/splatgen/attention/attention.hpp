#pragma once

#include "splatgen/ad/params.hpp"
#include "splatgen/geometry/pointops.hpp"

#include <string>
#include <utility>
#include <vector>

namespace sg::attn {

using ad::Shape;
using ad::TensorT;
using ad::VarT;

/// Image-feature grid surrogate: H' x W' cells with C channels.
template <class T>
struct FeatureGridT {
    int64_t height = 0, width = 0, channels = 0;
    TensorT<T> data; // H' x W' x C

    int64_t cells() const { return height * width; } // M

    TensorT<T> flattened() const { return data.reshaped({height * width, channels}); }
};

struct AttentionConfig {
    int heads = 2;
    int dim = 16;           // per-head embed dim for uplift/upsample; total for self-attention
    int pe_frequencies = 4; // sinusoid octaves for 3D coordinates
    bool scaled = true;     // 1/sqrt(d) before softmax (config flag; unscaled form testable)
};

template <class T>
struct EmbedWeights {
    VarT<T> W, b;
};

// Records intermediate tensor shapes of one attention evaluation.
struct AttnTrace {
    std::vector<std::pair<std::string, Shape>> shapes;
    void put(const std::string& name, const Shape& s) { shapes.emplace_back(name, s); }
    const Shape& at(const std::string& name) const {
        for (auto& [k, v] : shapes)
            if (k == name) return v;
        throw std::out_of_range("no trace entry " + name);
    }
};

inline int64_t point_embed_input_dim(int pe_frequencies) {
    return 3 + 6 * (int64_t)pe_frequencies; // raw coords + sin/cos per octave per coord
}

template <class T>
EmbedWeights<T> make_point_embed(ad::ParamRegistry<T>& reg, const std::string& name,
                                 int pe_frequencies, int heads, int dim_per_head, Rng& rng) {
    int64_t in = point_embed_input_dim(pe_frequencies);
    int64_t out = (int64_t)heads * dim_per_head;
    return {reg.add(name + ".W", ad::glorot_init<T>(in, out, rng)),
            reg.add(name + ".b", TensorT<T>::zeros({out}))};
}

template <class T>
EmbedWeights<T> make_feature_embed(ad::ParamRegistry<T>& reg, const std::string& name,
                                   int64_t feature_dim, int heads, int dim_per_head, Rng& rng) {
    int64_t out = (int64_t)heads * dim_per_head;
    return {reg.add(name + ".W", ad::glorot_init<T>(feature_dim, out, rng)),
            reg.add(name + ".b", TensorT<T>::zeros({out}))};
}

/// Sinusoidal expansion of 3D coordinates: per coordinate x, the raw value
/// followed by sin/cos(2^j pi x) for j = 0..L-1. Row-wise; output N x (3+6L).
template <class T>
TensorT<T> sinusoid_expand(const TensorT<T>& pts, int pe_frequencies) {
    int64_t n = pts.numel() / 3;
    int64_t w = point_embed_input_dim(pe_frequencies);
    TensorT<T> out({n, w});
    const T pi = (T)3.14159265358979323846;
    for (int64_t i = 0; i < n; ++i) {
        T* row = out.data.data() + i * w;
        for (int c = 0; c < 3; ++c) {
            T x = pts.data[i * 3 + c];
            row[c] = x;
            for (int j = 0; j < pe_frequencies; ++j) {
                T arg = std::ldexp(T(1), j) * pi * x;
                row[3 + c * 2 * pe_frequencies + 2 * j] = std::sin(arg);
                row[3 + c * 2 * pe_frequencies + 2 * j + 1] = std::cos(arg);
            }
        }
    }
    return out;
}

/// l_PE for 3D points (constants): sinusoidal expansion then a learned linear
/// map, reshaped to N x h x dh.
template <class T>
VarT<T> embed_points(const TensorT<T>& pts, const EmbedWeights<T>& w, int heads, int dim_per_head,
                     int pe_frequencies) {
    int64_t n = pts.numel() / 3;
    auto expanded = VarT<T>::constant(sinusoid_expand(pts, pe_frequencies));
    auto e = ad::linear(expanded, w.W, w.b);
    return ad::reshape(e, {n, (int64_t)heads, (int64_t)dim_per_head});
}

/// l_PE for feature vectors: learned linear map only (no sinusoids).
template <class T>
VarT<T> embed_features(const VarT<T>& f, const EmbedWeights<T>& w, int heads, int dim_per_head) {
    int64_t n = f.value().dim(0);
    auto e = ad::linear(f, w.W, w.b);
    return ad::reshape(e, {n, (int64_t)heads, (int64_t)dim_per_head});
}

template <class T>
struct UpliftWeights {
    EmbedWeights<T> query_points; // l_PE for X0
    EmbedWeights<T> key_features; // l_PE for F
};

template <class T>
UpliftWeights<T> make_uplift_weights(ad::ParamRegistry<T>& reg, const std::string& prefix,
                                     const AttentionConfig& cfg, int64_t channels, Rng& rng) {
    return {make_point_embed(reg, prefix + ".q", cfg.pe_frequencies, cfg.heads, cfg.dim, rng),
            make_feature_embed(reg, prefix + ".k", channels, cfg.heads, cfg.dim, rng)};
}

/// Feature -> point uplift: every point cross-attends over all M grid cells.
/// Output N x C.
template <class T>
VarT<T> uplift_cross_attention(const TensorT<T>& X0, const FeatureGridT<T>& grid_dims,
                               const VarT<T>& grid /* M x C */, const UpliftWeights<T>& w,
                               const AttentionConfig& cfg, AttnTrace* trace = nullptr) {
    int64_t N = X0.numel() / 3;
    int64_t M = grid_dims.cells();
    int64_t C = grid_dims.channels;
    int64_t h = cfg.heads, d = cfg.dim;
    if (C % h != 0) throw std::invalid_argument("uplift: C not divisible by head count");

    auto Q = ad::reshape(embed_points(X0, w.query_points, (int)h, (int)d, cfg.pe_frequencies),
                         {N, h, 1, d});
    // embed gives M x h x d; bring heads forward before the batch reshape
    auto K = ad::reshape(
        ad::permute(embed_features(grid, w.key_features, (int)h, (int)d), {1, 0, 2}),
        {1, h, M, d});
    // split(F, h): M x C -> 1 x h x M x C/h
    auto V = ad::permute(ad::reshape(grid, {M, h, C / h}), {1, 0, 2});
    V = ad::reshape(V, {1, h, M, C / h});

    auto Kt = ad::transpose_last2(K);
    auto scores = ad::matmul(Q, Kt); // N x h x 1 x M
    if (cfg.scaled) scores = ad::scale(scores, (T)(1.0 / std::sqrt((double)d)));
    auto A = ad::softmax_last(scores);
    auto out = ad::matmul(A, V); // N x h x 1 x C/h

    if (trace) {
        trace->put("Q", Q.shape());
        trace->put("Kt", Kt.shape());
        trace->put("V", V.shape());
        trace->put("scores", scores.shape());
        trace->put("headed", out.shape());
    }
    auto flat = ad::reshape(out, {N, C});
    if (trace) trace->put("out", flat.shape());
    return flat;
}

template <class T>
struct UpsampleWeights {
    EmbedWeights<T> query_points; // l_PE for X0
    EmbedWeights<T> key_points;   // l_PE for X0'[K]
};

template <class T>
UpsampleWeights<T> make_upsample_weights(ad::ParamRegistry<T>& reg, const std::string& prefix,
                                         const AttentionConfig& cfg, Rng& rng) {
    return {make_point_embed(reg, prefix + ".q", cfg.pe_frequencies, cfg.heads, cfg.dim, rng),
            make_point_embed(reg, prefix + ".k", cfg.pe_frequencies, cfg.heads, cfg.dim, rng)};
}

/// Coarse-to-fine feature propagation: each of the N points attends over the
/// features of its k nearest coarse points. Output N x f.
template <class T>
VarT<T> upsample_attention(const TensorT<T>& X0, const TensorT<T>& X0sub,
                           const geo::KnnGraph& K, const VarT<T>& Fsub /* n x f */,
                           const UpsampleWeights<T>& w, const AttentionConfig& cfg,
                           AttnTrace* trace = nullptr) {
    int64_t N = X0.numel() / 3;
    int64_t n = X0sub.numel() / 3;
    int64_t f = Fsub.value().dim(-1);
    int64_t h = cfg.heads, d = cfg.dim, k = K.k;
    if (f % h != 0) throw std::invalid_argument("upsample: f not divisible by head count");
    if ((int64_t)K.rows() != N) throw std::invalid_argument("upsample: graph row count != N");
    for (int32_t idx : K.indices)
        if (idx < 0 || idx >= n) throw std::invalid_argument("upsample: graph index out of range");

    auto Q = ad::reshape(embed_points(X0, w.query_points, (int)h, (int)d, cfg.pe_frequencies),
                         {N, h, 1, d});

    // gather neighbor coordinates (N*k x 3) and embed
    TensorT<T> nb({N * k, 3});
    for (int64_t i = 0; i < N * k; ++i)
        for (int c = 0; c < 3; ++c) nb.data[i * 3 + c] = X0sub.data[(int64_t)K.indices[i] * 3 + c];
    auto Ke = embed_points(nb, w.key_points, (int)h, (int)d, cfg.pe_frequencies); // (N*k) x h x d
    auto Kt = ad::permute(ad::reshape(Ke, {N, k, h, d}), {0, 2, 3, 1});           // N x h x d x k

    std::vector<int64_t> gather_idx(K.indices.begin(), K.indices.end());
    auto Vg = ad::gather_rows(Fsub, gather_idx); // (N*k) x f
    auto V = ad::permute(ad::reshape(Vg, {N, k, h, f / h}), {0, 2, 1, 3}); // N x h x k x f/h

    auto scores = ad::matmul(Q, Kt); // N x h x 1 x k
    if (cfg.scaled) scores = ad::scale(scores, (T)(1.0 / std::sqrt((double)d)));
    auto A = ad::softmax_last(scores);
    auto out = ad::matmul(A, V); // N x h x 1 x f/h

    if (trace) {
        trace->put("Q", Q.shape());
        trace->put("Kt", Kt.shape());
        trace->put("V", V.shape());
        trace->put("scores", scores.shape());
        trace->put("headed", out.shape());
    }
    auto flat = ad::reshape(out, {N, f});
    if (trace) trace->put("out", flat.shape());
    return flat;
}

template <class T>
struct SelfAttnWeights {
    EmbedWeights<T> query_features; // l_PE for F_X
    EmbedWeights<T> key_features;   // l_PE for F_X[K']
    EmbedWeights<T> key_positions;  // l_PE for relative coordinates (affine, no sinusoids)
};

template <class T>
SelfAttnWeights<T> make_self_attn_weights(ad::ParamRegistry<T>& reg, const std::string& prefix,
                                          const AttentionConfig& cfg, int64_t feature_dim,
                                          Rng& rng) {
    if (cfg.dim % cfg.heads != 0)
        throw std::invalid_argument("self-attention: dim not divisible by heads");
    int dh = cfg.dim / cfg.heads;
    return {make_feature_embed(reg, prefix + ".q", feature_dim, cfg.heads, dh, rng),
            make_feature_embed(reg, prefix + ".k", feature_dim, cfg.heads, dh, rng),
            // pe_frequencies=0: the positional key map stays affine, so the
            // broadcast difference below depends only on coordinate offsets
            make_point_embed(reg, prefix + ".p", 0, cfg.heads, dh, rng)};
}

/// kNN self-attention with relative positional keys. Output N x f (no residual
/// here; composition is the caller's concern).
template <class T>
VarT<T> knn_self_attention(const TensorT<T>& X0, const VarT<T>& FX /* N x f */,
                           const geo::KnnGraph& Kp, const SelfAttnWeights<T>& w,
                           const AttentionConfig& cfg, AttnTrace* trace = nullptr) {
    int64_t N = X0.numel() / 3;
    int64_t f = FX.value().dim(-1);
    int64_t h = cfg.heads, k = Kp.k;
    if (cfg.dim % h != 0) throw std::invalid_argument("self-attention: dim not divisible by heads");
    int64_t dh = cfg.dim / h;
    if (f % h != 0) throw std::invalid_argument("self-attention: f not divisible by head count");
    if ((int64_t)Kp.rows() != N) throw std::invalid_argument("self-attention: graph rows != N");
    for (int32_t idx : Kp.indices)
        if (idx < 0 || idx >= N) throw std::invalid_argument("self-attention: index out of range");

    std::vector<int64_t> gather_idx(Kp.indices.begin(), Kp.indices.end());

    auto Q = ad::reshape(embed_features(FX, w.query_features, (int)h, (int)dh), {N, h, 1, dh});

    auto FXnb = ad::gather_rows(FX, gather_idx); // (N*k) x f
    auto Kfeat = ad::permute(
        ad::reshape(embed_features(FXnb, w.key_features, (int)h, (int)dh), {N, k, h, dh}),
        {0, 2, 1, 3}); // N x h x k x dh

    // relative positional keys: affine l_PE of own vs neighbor coordinates,
    // broadcast-subtracted (bias cancels, so only coordinate differences matter)
    auto Pself = ad::reshape(embed_points(X0, w.key_positions, (int)h, (int)dh, 0), {N, h, 1, dh});
    TensorT<T> nb({N * k, 3});
    for (int64_t i = 0; i < N * k; ++i)
        for (int c = 0; c < 3; ++c) nb.data[i * 3 + c] = X0.data[gather_idx[i] * 3 + c];
    auto Pnb = ad::permute(
        ad::reshape(embed_points(nb, w.key_positions, (int)h, (int)dh, 0), {N, k, h, dh}),
        {0, 2, 1, 3}); // N x h x k x dh
    auto Prel = ad::sub(Pself, Pnb);
    auto K = ad::add(Kfeat, Prel);

    auto V = ad::permute(ad::reshape(FXnb, {N, k, h, f / h}), {0, 2, 1, 3}); // N x h x k x f/h

    auto Kt = ad::transpose_last2(K);
    auto scores = ad::matmul(Q, Kt); // N x h x 1 x k
    if (cfg.scaled) scores = ad::scale(scores, (T)(1.0 / std::sqrt((double)dh)));
    auto A = ad::softmax_last(scores);
    auto out = ad::matmul(A, V);

    if (trace) {
        trace->put("Q", Q.shape());
        trace->put("Kfeat", Kfeat.shape());
        trace->put("Pself", Pself.shape());
        trace->put("Pnb", Pnb.shape());
        trace->put("K", K.shape());
        trace->put("Kt", Kt.shape());
        trace->put("V", V.shape());
        trace->put("scores", scores.shape());
        trace->put("headed", out.shape());
    }
    auto flat = ad::reshape(out, {N, f});
    if (trace) trace->put("out", flat.shape());
    return flat;
}

using FeatureGrid = FeatureGridT<float>;

} // namespace sg::attn

#pragma once

#include "splatgen/attention/attention.hpp"
#include "splatgen/diffusion/condition.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sg::diff {

using ad::TensorT;
using ad::VarT;

struct DenoiserConfig {
    int levels = 3;
    std::vector<int64_t> widths{64, 128, 256}; // per level, fine to coarse
    int subsample_ratio = 4;                   // point count divisor between levels
    int k = 8;                                 // neighbors for MLP mixing and resampling
    int time_dim = 64;                         // sinusoidal timestep embedding size
    attn::AttentionConfig attn{};              // down/up-sampling attention
    int64_t channels = 9;                      // per-point parameter width
    int64_t cond_dim = 34;

    void validate() const {
        if (levels < 1 || (int)widths.size() != levels)
            throw std::invalid_argument("denoiser config: widths must match level count");
        if (subsample_ratio < 2 || k < 1 || time_dim < 2)
            throw std::invalid_argument("denoiser config: bad ratio/k/time_dim");
        for (int64_t w : widths)
            if (w <= 0 || w % attn.heads != 0)
                throw std::invalid_argument("denoiser config: widths must divide by head count");
    }
};

/// Per-topology precomputation: point positions and kNN graphs at each level.
/// Built once from the anchor cloud and shared read-only across sampling threads.
template <class T>
struct DenoiserGraphsT {
    std::vector<TensorT<T>> points;            // level l: N_l x 3
    std::vector<std::vector<int64_t>> subsets; // level l>0: indices into level l-1
    std::vector<geo::KnnGraph> self_graphs;    // level l: N_l x k into itself (self included)
    std::vector<geo::KnnGraph> down_graphs;    // l -> l+1: N_{l+1} x k into level l
    std::vector<geo::KnnGraph> up_graphs;      // l+1 -> l: N_l x k into level l+1

    int levels() const { return (int)points.size(); }
    int64_t count(int level) const { return points[(size_t)level].numel() / 3; }
};

template <class T>
DenoiserGraphsT<T> build_denoiser_graphs(const TensorT<T>& X0 /* N x 3 */,
                                         const DenoiserConfig& cfg, uint64_t seed) {
    cfg.validate();
    int64_t N = X0.numel() / 3;
    if (N < cfg.k) throw std::invalid_argument("denoiser graphs: fewer points than k");

    auto to_vec3 = [](const TensorT<T>& t) {
        std::vector<geo::Vec3> pts(t.numel() / 3);
        for (size_t i = 0; i < pts.size(); ++i)
            pts[i] = {(float)t.data[i * 3], (float)t.data[i * 3 + 1], (float)t.data[i * 3 + 2]};
        return pts;
    };

    DenoiserGraphsT<T> g;
    g.points.push_back(X0);
    g.subsets.emplace_back(); // level 0 keeps everything
    for (int l = 1; l < cfg.levels; ++l) {
        int64_t n = std::max<int64_t>(cfg.k, g.count(l - 1) / cfg.subsample_ratio);
        auto prev = to_vec3(g.points.back());
        auto sub = geo::farthest_point_subsample(prev, n, seed + (uint64_t)l);
        TensorT<T> coords({(int64_t)sub.points.size(), 3});
        for (size_t i = 0; i < sub.origin_indices.size(); ++i)
            for (int c = 0; c < 3; ++c)
                coords.data[(int64_t)i * 3 + c] =
                    g.points.back().data[(int64_t)sub.origin_indices[i] * 3 + c];
        g.subsets.emplace_back(sub.origin_indices.begin(), sub.origin_indices.end());
        g.points.push_back(std::move(coords));
    }
    for (int l = 0; l < cfg.levels; ++l) {
        auto pts = to_vec3(g.points[(size_t)l]);
        g.self_graphs.push_back(geo::knn_indices(pts, pts, cfg.k, /*include_self=*/true));
        if (l + 1 < cfg.levels) {
            auto coarse = to_vec3(g.points[(size_t)l + 1]);
            g.down_graphs.push_back(geo::knn_indices(coarse, pts, cfg.k, true));
            g.up_graphs.push_back(geo::knn_indices(pts, coarse, cfg.k, true));
        }
    }
    return g;
}

template <class T>
struct KnnMlpWeights {
    VarT<T> W1, b1, W2, b2;
};

template <class T>
KnnMlpWeights<T> make_knn_mlp(ad::ParamRegistry<T>& reg, const std::string& name, int k,
                              int64_t in_w, int64_t out_w, Rng& rng) {
    return {reg.add(name + ".W1", ad::glorot_init<T>((int64_t)k * in_w, out_w, rng)),
            reg.add(name + ".b1", TensorT<T>::zeros({out_w})),
            reg.add(name + ".W2", ad::glorot_init<T>(out_w, out_w, rng)),
            reg.add(name + ".b2", TensorT<T>::zeros({out_w}))};
}

/// Neighborhood-mixing replacement for Conv1D: concatenate each point's k
/// neighbor features (graph row order) and push through a shared 2-layer MLP.
template <class T>
VarT<T> knn_mlp(const VarT<T>& F /* N x w */, const geo::KnnGraph& K,
                const KnnMlpWeights<T>& w) {
    int64_t N = F.value().dim(0);
    int64_t width = F.value().dim(1);
    if ((int64_t)K.rows() != N) throw std::invalid_argument("knn_mlp: graph rows != N");
    std::vector<int64_t> idx(K.indices.begin(), K.indices.end());
    auto gathered = ad::reshape(ad::gather_rows(F, idx), {N, (int64_t)K.k * width});
    auto h = ad::silu(ad::linear(gathered, w.W1, w.b1));
    return ad::linear(h, w.W2, w.b2);
}

template <class T>
struct DenoiserLevelWeights {
    KnnMlpWeights<T> enc;
    KnnMlpWeights<T> dec;  // unused at the coarsest level
    VarT<T> time_W, time_b;
    VarT<T> cond_W;        // bias-free so a null (zero) condition adds nothing
    // transitions to the next-coarser level (absent at the coarsest)
    attn::UpsampleWeights<T> down_attn;
    VarT<T> down_W, down_b;
    attn::UpsampleWeights<T> up_attn;
    VarT<T> up_W, up_b; // applied after skip concatenation
};

template <class T>
struct DenoiserNetT {
    DenoiserConfig cfg;
    ad::ParamRegistry<T> reg;
    VarT<T> in_W, in_b, out_W, out_b;
    std::vector<DenoiserLevelWeights<T>> level;
};

template <class T>
DenoiserNetT<T> make_denoiser(const DenoiserConfig& cfg, Rng& rng) {
    cfg.validate();
    DenoiserNetT<T> net;
    net.cfg = cfg;
    auto& reg = net.reg;
    net.in_W = reg.add("in.W", ad::glorot_init<T>(cfg.channels, cfg.widths[0], rng));
    net.in_b = reg.add("in.b", TensorT<T>::zeros({cfg.widths[0]}));
    net.out_W = reg.add("out.W", ad::glorot_init<T>(cfg.widths[0], cfg.channels, rng));
    net.out_b = reg.add("out.b", TensorT<T>::zeros({cfg.channels}));
    for (int l = 0; l < cfg.levels; ++l) {
        std::string p = "lv" + std::to_string(l);
        int64_t w = cfg.widths[(size_t)l];
        DenoiserLevelWeights<T> lw{
            make_knn_mlp(reg, p + ".enc", cfg.k, w, w, rng),
            make_knn_mlp(reg, p + ".dec", cfg.k, w, w, rng),
            reg.add(p + ".time.W", ad::glorot_init<T>(cfg.time_dim, w, rng)),
            reg.add(p + ".time.b", TensorT<T>::zeros({w})),
            reg.add(p + ".cond.W", ad::glorot_init<T>(cfg.cond_dim, w, rng)),
            {}, {}, {}, {}, {}, {}};
        if (l + 1 < cfg.levels) {
            int64_t wn = cfg.widths[(size_t)l + 1];
            lw.down_attn = attn::make_upsample_weights(reg, p + ".down", cfg.attn, rng);
            lw.down_W = reg.add(p + ".down.W", ad::glorot_init<T>(w, wn, rng));
            lw.down_b = reg.add(p + ".down.b", TensorT<T>::zeros({wn}));
            lw.up_attn = attn::make_upsample_weights(reg, p + ".up", cfg.attn, rng);
            lw.up_W = reg.add(p + ".up.W", ad::glorot_init<T>(wn + w, w, rng));
            lw.up_b = reg.add(p + ".up.b", TensorT<T>::zeros({w}));
        }
        net.level.push_back(std::move(lw));
    }
    return net;
}

/// Sinusoidal timestep embedding, 1 x dim.
template <class T>
TensorT<T> timestep_embedding(int t, int dim) {
    TensorT<T> out({1, (int64_t)dim});
    int half = dim / 2;
    for (int j = 0; j < half; ++j) {
        double freq = std::exp(-std::log(10000.0) * j / std::max(1, half - 1));
        out.data[j] = (T)std::sin(t * freq);
        out.data[half + j] = (T)std::cos(t * freq);
    }
    return out;
}

namespace detail {
template <class T>
VarT<T> add_embeddings(const VarT<T>& F, const DenoiserLevelWeights<T>& lw,
                       const TensorT<T>& temb /* 1 x time_dim */,
                       const TensorT<T>& cond /* 1 x cond_dim */) {
    auto tproj = ad::linear(VarT<T>::constant(temb), lw.time_W, lw.time_b); // 1 x w
    auto cproj = ad::matmul(VarT<T>::constant(cond), lw.cond_W);            // 1 x w
    return ad::add(F, ad::add(tproj, cproj)); // broadcast over N rows
}
} // namespace detail

/// Full U-shaped pass predicting the clean signal (pred_x0). Output is
/// range-free; clamping to [-1,1] happens at sampling time only.
template <class T>
VarT<T> denoiser_forward(const VarT<T>& x_t /* N x 9 */, int t,
                         const TensorT<T>& cond_enc /* length cond_dim, zeros if null */,
                         const DenoiserGraphsT<T>& graphs, DenoiserNetT<T>& net) {
    const auto& cfg = net.cfg;
    if (graphs.levels() != cfg.levels)
        throw std::invalid_argument("denoiser: graph/net level mismatch");
    if (x_t.value().dim(0) != graphs.count(0) || x_t.value().dim(-1) != cfg.channels)
        throw std::invalid_argument("denoiser: input shape mismatch");
    if (cond_enc.numel() != cfg.cond_dim)
        throw std::invalid_argument("denoiser: condition length mismatch");
    for (int l = 0; l < cfg.levels; ++l)
        if (graphs.self_graphs[(size_t)l].k != cfg.k)
            throw std::invalid_argument("denoiser: graph k mismatch");

    auto temb = timestep_embedding<T>(t, cfg.time_dim);
    auto cond = cond_enc.reshaped({1, cfg.cond_dim});

    auto F = ad::linear(x_t, net.in_W, net.in_b);
    std::vector<VarT<T>> skips;
    for (int l = 0; l < cfg.levels; ++l) {
        auto& lw = net.level[(size_t)l];
        F = detail::add_embeddings(F, lw, temb, cond);
        F = ad::silu(knn_mlp(F, graphs.self_graphs[(size_t)l], lw.enc));
        if (l + 1 < cfg.levels) {
            skips.push_back(F);
            // coarse points query the fine features
            auto pooled = attn::upsample_attention(graphs.points[(size_t)l + 1],
                                                   graphs.points[(size_t)l],
                                                   graphs.down_graphs[(size_t)l], F,
                                                   lw.down_attn, cfg.attn);
            F = ad::silu(ad::linear(pooled, lw.down_W, lw.down_b));
        }
    }
    for (int l = cfg.levels - 2; l >= 0; --l) {
        auto& lw = net.level[(size_t)l];
        auto lifted = attn::upsample_attention(graphs.points[(size_t)l],
                                               graphs.points[(size_t)l + 1],
                                               graphs.up_graphs[(size_t)l], F,
                                               lw.up_attn, cfg.attn);
        F = ad::concat_last<T>({lifted, skips[(size_t)l]});
        F = ad::silu(ad::linear(F, lw.up_W, lw.up_b));
        F = detail::add_embeddings(F, lw, temb, cond);
        F = ad::silu(knn_mlp(F, graphs.self_graphs[(size_t)l], lw.dec));
    }
    return ad::linear(F, net.out_W, net.out_b);
}

using DenoiserGraphs = DenoiserGraphsT<float>;
using DenoiserNet = DenoiserNetT<float>;

} // namespace sg::diff

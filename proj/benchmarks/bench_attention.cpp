#include <benchmark/benchmark.h>

#include "splatgen/attention/attention.hpp"
#include "splatgen/geometry/pointops.hpp"
#include "splatgen/rng.hpp"

using namespace sg;
using ad::Tensor;
using Var = ad::VarT<float>;

namespace {

Tensor random_points(int64_t n, Rng& rng) {
    Tensor t({n, 3});
    for (auto& v : t.data) v = (float)rng.uniform(-1, 1);
    return t;
}

Tensor random_features(int64_t n, int64_t c, Rng& rng) {
    Tensor t({n, c});
    for (auto& v : t.data) v = (float)rng.uniform(-1, 1);
    return t;
}

std::vector<geo::Vec3> to_vec3(const Tensor& t) {
    std::vector<geo::Vec3> pts(t.numel() / 3);
    for (size_t i = 0; i < pts.size(); ++i)
        pts[i] = {t.data[(int64_t)i * 3], t.data[(int64_t)i * 3 + 1], t.data[(int64_t)i * 3 + 2]};
    return pts;
}

constexpr int64_t kChannels = 64;
constexpr int64_t kCells = 256;

attn::AttentionConfig config() {
    attn::AttentionConfig cfg;
    cfg.heads = 4;
    cfg.dim = 32;
    cfg.pe_frequencies = 4;
    return cfg;
}

} // namespace

/// Image-to-point feature lifting; expected linear in the point count N.
static void BM_UpliftCrossAttention(benchmark::State& state) {
    int64_t N = state.range(0);
    Rng rng(1);
    auto cfg = config();
    auto X0 = random_points(N, rng);
    attn::FeatureGridT<float> dims{16, 16, kChannels, {}};
    auto grid = Var::constant(random_features(kCells, kChannels, rng));
    ad::ParamRegistry<float> reg;
    auto w = attn::make_uplift_weights(reg, "w", cfg, kChannels, rng);
    for (auto _ : state) {
        ad::NoGrad ng;
        auto out = attn::uplift_cross_attention(X0, dims, grid, w, cfg);
        benchmark::DoNotOptimize(out.value().data.data());
    }
    state.SetComplexityN(N);
}
BENCHMARK(BM_UpliftCrossAttention)->Arg(2400)->Arg(4800)->Complexity(benchmark::oN);

/// Coarse-to-fine propagation over a k-nearest-neighbor graph.
static void BM_UpsampleAttention(benchmark::State& state) {
    int64_t N = state.range(0);
    int64_t n = N / 4;
    Rng rng(2);
    auto cfg = config();
    auto X0 = random_points(N, rng);
    auto X0sub = random_points(n, rng);
    auto graph = geo::knn_indices(to_vec3(X0), to_vec3(X0sub), 8);
    auto Fsub = Var::constant(random_features(n, kChannels, rng));
    ad::ParamRegistry<float> reg;
    auto w = attn::make_upsample_weights(reg, "w", cfg, rng);
    for (auto _ : state) {
        ad::NoGrad ng;
        auto out = attn::upsample_attention(X0, X0sub, graph, Fsub, w, cfg);
        benchmark::DoNotOptimize(out.value().data.data());
    }
    state.SetComplexityN(N);
}
BENCHMARK(BM_UpsampleAttention)->Arg(2400)->Arg(4800)->Complexity(benchmark::oN);

/// Local self-attention with relative positional keys.
static void BM_KnnSelfAttention(benchmark::State& state) {
    int64_t N = state.range(0);
    Rng rng(3);
    auto cfg = config();
    auto X0 = random_points(N, rng);
    auto graph = geo::knn_indices(to_vec3(X0), to_vec3(X0), 8, true);
    auto FX = Var::constant(random_features(N, kChannels, rng));
    ad::ParamRegistry<float> reg;
    auto w = attn::make_self_attn_weights(reg, "w", cfg, kChannels, rng);
    for (auto _ : state) {
        ad::NoGrad ng;
        auto out = attn::knn_self_attention(X0, FX, graph, w, cfg);
        benchmark::DoNotOptimize(out.value().data.data());
    }
    state.SetComplexityN(N);
}
BENCHMARK(BM_KnnSelfAttention)->Arg(2400)->Arg(4800)->Complexity(benchmark::oN);

BENCHMARK_MAIN();

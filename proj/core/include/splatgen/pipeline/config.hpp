#pragma once

#include "splatgen/gaussians.hpp"

#include <cstdint>
#include <string>

namespace sg::pipe {

/// All tunable defaults for the end-to-end pipeline, loadable from a flat
/// key=value text file. Unknown keys are rejected; values are type-checked.
struct RunConfig {
    // body / anchors
    int64_t anchors = 2400;        // splat count for fitting and uplift
    int shape_dims = 10;           // beta dimension
    float densify_edge = 0.03f;    // m, mesh densification threshold
    float densify_area = 5e-4f;    // m^2
    uint64_t anchor_seed = 11;

    // camera rig
    float rig_radius = 2.4f;
    float rig_fov = 0.7f;          // radians, vertical
    int image_size = 128;          // square renders
    float background = 1.f;        // gray level of the backdrop

    // splat constraints
    ConstraintRanges ranges;

    // synthetic data
    int64_t dataset_size = 256;
    float color_noise = 0.03f;     // painter jitter, per channel
    float paint_scale = 0.35f;     // splat sigma as a fraction of the region bound span
    int grid_size = 16;            // feature grid H' = W'
    int grid_channels = 64;        // feature grid C
    uint64_t feature_seed = 1234;  // shared random-projection seed

    // fitting
    int fit_iters = 2000;
    float fit_lr = 3e-2f;

    // uplift / twin models
    int uplift_heads = 4;
    int uplift_dim = 32;
    int pe_frequencies = 4;
    int64_t uplift_subset = 600;   // FPS size n for the cross-attention stage
    int knn_k = 8;
    int self_attn_layers = 2;
    int twin_heads = 2;            // condition encoding length 34 must divide
    int uplift_steps = 1000;
    float uplift_lr = 2e-3f;
    float twin_weight = 0.25f;     // multi-view twin supervision factor
    float beta_weight = 1.f;       // shape-vector MSE factor
    int batch = 4;

    // diffusion
    int64_t diffusion_points = 1000;
    int diffusion_T = 1000;
    float beta_1 = 1e-4f;
    float beta_T = 0.02f;
    int diffusion_steps = 4000;    // optimizer steps
    float diffusion_lr = 1e-3f;
    float p_drop = 0.1f;           // condition dropout for classifier-free training
    int denoiser_levels = 3;
    int denoiser_width = 64;       // width of the finest level; doubles per level
    int denoiser_ratio = 4;
    int denoiser_heads = 4;
    int denoiser_dim = 16;
    int time_dim = 64;
    float guidance = 3.f;

    uint64_t seed = 42;

    void validate() const;

    /// Apply one "key=value" assignment; throws on unknown key or bad value.
    void set(const std::string& key, const std::string& value);

    /// Parse a flat key=value file ('#' comments, blank lines allowed).
    static RunConfig load(const std::string& path);

    /// Write every key with its current value (a loadable reference file).
    void save(const std::string& path) const;
    std::string to_text() const;
};

} // namespace sg::pipe

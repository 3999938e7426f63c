#pragma once

#include "splatgen/attention/attention.hpp"
#include "splatgen/diffusion/checkpoint.hpp"
#include "splatgen/diffusion/condition.hpp"
#include "splatgen/diffusion/denoiser.hpp"
#include "splatgen/diffusion/normalize.hpp"
#include "splatgen/diffusion/sampler.hpp"
#include "splatgen/gaussians.hpp"
#include "splatgen/geometry/body.hpp"
#include "splatgen/geometry/camera.hpp"
#include "splatgen/heads/heads.hpp"
#include "splatgen/pipeline/config.hpp"
#include "splatgen/raster/image.hpp"
#include "splatgen/raster/rasterizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sg::pipe {

using ad::Tensor;
using Var = ad::VarT<float>;

/// Shared fixed state: body template, anchor cloud, the four capture cameras.
struct Rig {
    geo::BodyModel body;
    geo::AnchorSet anchors;
    std::vector<geo::Camera> cameras; // front, back, left, right
    geo::Vec3 center{0.f, 0.f, 0.f};
    raster::RasterSettings raster;
    Eigen::Vector3f background{1.f, 1.f, 1.f};
};

Rig build_rig(const RunConfig& cfg);

/// Reference linear-RGB values for the painter and alignment scoring.
Eigen::Vector3f vocab_color_rgb(int color_index); // 7-color slot
Eigen::Vector3f skin_rgb(int race_index);
Eigen::Vector3f hair_rgb(int hair_index);
int nearest_vocab_color(const Eigen::Vector3f& rgb);

struct SyntheticSample {
    diff::Condition attributes;
    std::vector<raster::Image> views; // rendered from the 4 canonical cameras
    Tensor feature_grid;              // (grid_size^2) x grid_channels
    Tensor gt_params;                 // N x 9 [delta | scale | color]
    std::vector<float> beta_gt;
};

/// Body-shape vector implied by gender plus seeded jitter.
std::vector<float> sample_beta(uint64_t seed, const diff::Condition& attr, int shape_dims);

/// Deterministic attribute-driven splat painting at a given body shape.
GaussianSet paint_gaussians(uint64_t seed, const diff::Condition& attr, const Rig& rig,
                            const std::vector<float>& beta, const RunConfig& cfg);

/// Downsampled front view expanded to grid_channels channels: RGB, coordinate
/// ramps, and seeded random projections (shared across the dataset).
Tensor build_feature_grid(const raster::Image& front, const RunConfig& cfg);

SyntheticSample generate_synthetic_sample(uint64_t seed, const diff::Condition& attr,
                                          const Rig& rig, const RunConfig& cfg);

/// Seeded attribute draw over the full vocabulary.
diff::Condition random_condition(uint64_t seed, const diff::ConditionVocab& vocab);

struct FitReport {
    std::vector<double> losses; // one entry per iteration
};

/// First-order fit of raw {delta, scale, color} inputs against the target
/// views; opacity and rotations stay fixed. Throws on non-finite loss.
GaussianSet fit_gaussians(const std::vector<raster::Image>& targets,
                          const std::vector<geo::Camera>& cameras, const Rig& rig,
                          const RunConfig& cfg, FitReport* report = nullptr);

/// Image- or text-conditioned reconstruction model:
/// uplift (on an FPS subset) -> upsample to all anchors -> stacked kNN
/// self-attention -> bounded regression heads + shape vector.
struct UpliftModel {
    bool text_mode = false;
    attn::AttentionConfig acfg;
    attn::FeatureGridT<float> grid_dims;
    ad::ParamRegistry<float> reg;
    attn::UpliftWeights<float> uplift;
    attn::UpsampleWeights<float> up;
    std::vector<attn::SelfAttnWeights<float>> self_layers;
    heads::RegressionWeights<float> head;
    heads::ShapeMlpWeights<float> shape;
    // fixed topology (canonical pose)
    Tensor X0;                // N x 3
    Tensor X0sub;             // n x 3
    geo::KnnGraph up_graph;   // N x k into the subset
    geo::KnnGraph self_graph; // N x k into itself
    std::vector<geo::Region> regions;
    ConstraintRanges ranges;
    int64_t shape_dims = 0;
};

UpliftModel make_uplift_model(const Rig& rig, const RunConfig& cfg, bool text_mode,
                              uint64_t seed);

struct UpliftOutput {
    heads::GaussianHeads<float> params; // N x 3 each, bounded
    Var beta;                           // 1 x shape_dims
};

/// grid is M x C (image features) or 7 x 34 (slot tokens in text mode).
UpliftOutput uplift_forward(UpliftModel& model, const Var& grid);

/// Bakes a forward pass into a concrete GaussianSet at the given body shape.
GaussianSet materialize(const Rig& rig, const heads::GaussianHeads<float>& params,
                        const std::vector<float>& beta);

struct TrainReport {
    double first_loss = 0., last_loss = 0.;
    int steps = 0;
};

/// Condition encoding as one token per attribute slot (7 x 34): row s holds
/// the slot's one-hot segment, zeros elsewhere. Input grid of the text twin.
Tensor text_token_grid(const diff::Condition& cond, const diff::ConditionVocab& vocab);

/// Twin renders used as extra supervision; no gradients flow into the twin.
std::vector<raster::Image> multiview_regularize(UpliftModel& twin, const Rig& rig,
                                                const diff::Condition& cond,
                                                const diff::ConditionVocab& vocab);

/// Front-view supervised training; when `twin` is given its renders of each
/// sample's condition are added with weight cfg.twin_weight.
TrainReport train_uplift(UpliftModel& model, const std::vector<SyntheticSample>& data,
                         const Rig& rig, const RunConfig& cfg,
                         UpliftModel* twin = nullptr);

/// Text-conditioned twin trained against all four views.
TrainReport train_text_twin(UpliftModel& twin, const std::vector<SyntheticSample>& data,
                            const Rig& rig, const RunConfig& cfg,
                            const diff::ConditionVocab& vocab);

/// Denoiser plus everything needed to sample it.
struct DiffusionModel {
    diff::DenoiserConfig dcfg;
    diff::DenoiserGraphsT<float> graphs;
    diff::DenoiserNetT<float> net;
    diff::ParamStats stats;
    diff::NoiseSchedule sched;
    std::vector<int32_t> anchor_indices; // rows of the rig anchors used
    std::vector<geo::Region> regions;
};

/// Subsamples the rig anchors to cfg.diffusion_points and builds the graphs.
DiffusionModel make_diffusion_model(const Rig& rig, const RunConfig& cfg);

/// Rows of an N x 9 parameter tensor at the diffusion anchor subset.
Tensor subset_params(const Tensor& params, const std::vector<int32_t>& indices);

TrainReport train_diffusion(DiffusionModel& model,
                            const std::vector<SyntheticSample>& corpus,
                            const RunConfig& cfg, const diff::ConditionVocab& vocab);

/// Guided ancestral sampling, denormalized and clamped into the bound ranges.
Tensor sample_params(DiffusionModel& model, const diff::Condition& cond, float guidance,
                     uint64_t seed, const RunConfig& cfg, const diff::ConditionVocab& vocab);

/// Per-row clamp of [delta | scale | color] into the region's valid intervals.
Tensor clamp_params(const Tensor& params, const std::vector<geo::Region>& regions,
                    const ConstraintRanges& ranges);

/// Mean color over splats whose part tag is in `parts`.
Eigen::Vector3f mean_part_color(const Tensor& params, const std::vector<int32_t>& part_tags,
                                const std::vector<geo::Part>& parts);

/// True when the top-region mean color is nearest the prompted top color.
bool top_color_aligned(const Tensor& params, const std::vector<int32_t>& part_tags,
                       const diff::Condition& cond);

// checkpoint glue
diff::Checkpoint model_checkpoint(const UpliftModel& model, const diff::ConditionVocab& vocab);
void load_model(UpliftModel& model, const diff::Checkpoint& ckpt);
diff::Checkpoint model_checkpoint(const DiffusionModel& model,
                                  const diff::ConditionVocab& vocab);
void load_model(DiffusionModel& model, const diff::Checkpoint& ckpt);

} // namespace sg::pipe

#include "splatgen/pipeline/pipeline.hpp"

#include "splatgen/ad/ops.hpp"
#include "splatgen/ad/params.hpp"
#include "splatgen/geometry/pointops.hpp"
#include "splatgen/raster/losses.hpp"
#include "splatgen/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sg::pipe {

namespace {

Tensor positions_tensor(const std::vector<geo::Vec3>& pts) {
    Tensor t({(int64_t)pts.size(), 3});
    for (size_t i = 0; i < pts.size(); ++i)
        for (int c = 0; c < 3; ++c) t.data[(int64_t)i * 3 + c] = pts[i][c];
    return t;
}

std::vector<geo::Vec3> to_vec3(const Tensor& t) {
    std::vector<geo::Vec3> pts(t.numel() / 3);
    for (size_t i = 0; i < pts.size(); ++i)
        pts[i] = {t.data[(int64_t)i * 3], t.data[(int64_t)i * 3 + 1], t.data[(int64_t)i * 3 + 2]};
    return pts;
}



double loss_scalar(const Var& l) { return (double)l.value().data[0]; }

} // namespace

Rig build_rig(const RunConfig& cfg) {
    cfg.validate();
    Rig rig;
    rig.body = geo::build_mannequin(cfg.shape_dims);
    rig.anchors = geo::build_anchors(rig.body, cfg.anchors, cfg.densify_edge, cfg.densify_area,
                                     cfg.anchor_seed);
    geo::Vec3 center{0.f, 0.f, 0.f};
    for (const auto& p : rig.anchors.positions) center += p;
    center /= (float)rig.anchors.positions.size();
    rig.center = center;
    rig.cameras = geo::canonical_rig(center, cfg.rig_radius, cfg.rig_fov, cfg.image_size,
                                     cfg.image_size);
    rig.background = {cfg.background, cfg.background, cfg.background};
    return rig;
}

Eigen::Vector3f vocab_color_rgb(int color_index) {
    static const Eigen::Vector3f table[7] = {
        {0.80f, 0.06f, 0.06f}, // red
        {0.43f, 0.26f, 0.12f}, // brown
        {0.04f, 0.04f, 0.04f}, // black
        {0.95f, 0.50f, 0.67f}, // pink
        {0.93f, 0.80f, 0.10f}, // yellow
        {0.10f, 0.20f, 0.75f}, // blue
        {0.48f, 0.12f, 0.65f}, // purple
    };
    if (color_index < 0 || color_index >= 7)
        throw std::invalid_argument("vocab_color_rgb: index out of range");
    return table[color_index];
}

Eigen::Vector3f skin_rgb(int race_index) {
    static const Eigen::Vector3f table[3] = {
        {0.94f, 0.78f, 0.67f}, // white
        {0.42f, 0.28f, 0.20f}, // black
        {0.88f, 0.72f, 0.55f}, // asian
    };
    if (race_index < 0 || race_index >= 3)
        throw std::invalid_argument("skin_rgb: index out of range");
    return table[race_index];
}

Eigen::Vector3f hair_rgb(int hair_index) {
    static const Eigen::Vector3f table[4] = {
        {0.89f, 0.75f, 0.45f}, // blonde
        {0.06f, 0.06f, 0.06f}, // black
        {0.38f, 0.24f, 0.12f}, // brown
        {0.72f, 0.33f, 0.10f}, // ginger
    };
    if (hair_index < 0 || hair_index >= 4)
        throw std::invalid_argument("hair_rgb: index out of range");
    return table[hair_index];
}

int nearest_vocab_color(const Eigen::Vector3f& rgb) {
    int best = 0;
    float best_d = std::numeric_limits<float>::max();
    for (int i = 0; i < 7; ++i) {
        float d = (vocab_color_rgb(i) - rgb).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

std::vector<float> sample_beta(uint64_t seed, const diff::Condition& attr, int shape_dims) {
    Rng rng(seed * 0x9e3779b97f4a7c15ull + 17);
    std::vector<float> beta((size_t)shape_dims, 0.f);
    if (shape_dims == 0) return beta;
    float gender_offset = (!attr.is_null && attr.attr[1] == 1) ? -0.4f : 0.4f;
    beta[0] = gender_offset + (float)rng.uniform(-0.3, 0.3);
    for (int b = 1; b < shape_dims; ++b) beta[(size_t)b] = (float)rng.uniform(-0.2, 0.2);
    return beta;
}

GaussianSet paint_gaussians(uint64_t seed, const diff::Condition& attr, const Rig& rig,
                            const std::vector<float>& beta, const RunConfig& cfg) {
    if (attr.is_null) throw std::invalid_argument("paint_gaussians: null condition");
    const auto& a = rig.anchors;
    int64_t n = (int64_t)a.positions.size();

    GaussianSet g;
    g.anchors = geo::anchors_for_beta(a, beta, cfg.shape_dims);
    g.rotations.reserve((size_t)n);
    for (const auto& nrm : a.normals) g.rotations.push_back(geo::normal_frame(nrm));
    g.regions = a.regions;
    g.delta = Tensor({n, 3});
    g.scale = Tensor({n, 3});
    g.color = Tensor({n, 3});

    // vertical extent of the head decides hair vs face
    float head_lo = std::numeric_limits<float>::max(), head_hi = std::numeric_limits<float>::lowest();
    for (int64_t i = 0; i < n; ++i)
        if (a.parts[(size_t)i] == (int32_t)geo::Part::Head) {
            head_lo = std::min(head_lo, a.positions[(size_t)i].y());
            head_hi = std::max(head_hi, a.positions[(size_t)i].y());
        }
    float hair_line = head_lo + 0.55f * (head_hi - head_lo);

    // "long-sleeve ..." tops (vocabulary indices 0 and 2) cover the arms
    bool long_sleeves = attr.attr[3] == 0 || attr.attr[3] == 2;
    Eigen::Vector3f skin = skin_rgb(attr.attr[0]);
    Eigen::Vector3f hair = hair_rgb(attr.attr[2]);
    Eigen::Vector3f top = vocab_color_rgb(attr.attr[4]);
    Eigen::Vector3f trouser = vocab_color_rgb(attr.attr[5]);
    Eigen::Vector3f trainer = vocab_color_rgb(attr.attr[6]);

    Rng rng(seed);
    for (int64_t i = 0; i < n; ++i) {
        auto part = (geo::Part)a.parts[(size_t)i];
        Eigen::Vector3f base = skin;
        switch (part) {
        case geo::Part::Torso: base = top; break;
        case geo::Part::ArmLeft:
        case geo::Part::ArmRight: base = long_sleeves ? top : skin; break;
        case geo::Part::HandLeft:
        case geo::Part::HandRight: base = skin; break;
        case geo::Part::LegLeft:
        case geo::Part::LegRight: base = trouser; break;
        case geo::Part::FootLeft:
        case geo::Part::FootRight: base = trainer; break;
        case geo::Part::Head:
            base = a.positions[(size_t)i].y() > hair_line ? hair : skin;
            break;
        }
        float span = cfg.ranges.scale_bound(a.regions[(size_t)i]) - cfg.ranges.s_min;
        float sigma = cfg.ranges.s_min + cfg.paint_scale * span;
        for (int c = 0; c < 3; ++c) {
            g.delta.data[i * 3 + c] = 0.f;
            g.scale.data[i * 3 + c] = sigma;
            float jitter = (float)rng.uniform(-cfg.color_noise, cfg.color_noise);
            g.color.data[i * 3 + c] = std::clamp(base[c] + jitter, 0.f, 1.f);
        }
    }
    g.validate(cfg.ranges);
    return g;
}

Tensor build_feature_grid(const raster::Image& front, const RunConfig& cfg) {
    int gs = cfg.grid_size;
    int64_t M = (int64_t)gs * gs, C = cfg.grid_channels;
    if (front.width % gs != 0 || front.height % gs != 0)
        throw std::invalid_argument("build_feature_grid: image size not divisible by grid size");
    int bx = front.width / gs, by = front.height / gs;

    Tensor grid({M, C});
    // shared random projection of [r, g, b, x, y, 1] into the remaining channels
    Rng prng(cfg.feature_seed);
    std::vector<float> proj((size_t)(C - 5) * 6);
    for (auto& w : proj) w = (float)(prng.normal() / std::sqrt(6.0));

    for (int cy = 0; cy < gs; ++cy)
        for (int cx = 0; cx < gs; ++cx) {
            float rgb[3] = {0.f, 0.f, 0.f};
            for (int y = cy * by; y < (cy + 1) * by; ++y)
                for (int x = cx * bx; x < (cx + 1) * bx; ++x)
                    for (int c = 0; c < 3; ++c) rgb[c] += front.at(y, x, c);
            for (int c = 0; c < 3; ++c) rgb[c] /= (float)(bx * by);
            float fx = (cx + 0.5f) / gs, fy = (cy + 0.5f) / gs;
            float in[6] = {rgb[0], rgb[1], rgb[2], fx, fy, 1.f};

            float* row = grid.data.data() + ((int64_t)cy * gs + cx) * C;
            row[0] = rgb[0];
            row[1] = rgb[1];
            row[2] = rgb[2];
            row[3] = fx;
            row[4] = fy;
            for (int64_t j = 0; j < C - 5; ++j) {
                float acc = 0.f;
                for (int k = 0; k < 6; ++k) acc += proj[(size_t)(j * 6 + k)] * in[k];
                row[5 + j] = std::tanh(acc);
            }
        }
    return grid;
}

SyntheticSample generate_synthetic_sample(uint64_t seed, const diff::Condition& attr,
                                          const Rig& rig, const RunConfig& cfg) {
    SyntheticSample s;
    s.attributes = attr;
    s.beta_gt = sample_beta(seed, attr, cfg.shape_dims);
    auto g = paint_gaussians(seed, attr, rig, s.beta_gt, cfg);
    s.gt_params = g.pack_params();
    for (const auto& cam : rig.cameras)
        s.views.push_back(raster::render_image(g, cam, rig.background, rig.raster));
    s.feature_grid = build_feature_grid(s.views[0], cfg);
    return s;
}

diff::Condition random_condition(uint64_t seed, const diff::ConditionVocab& vocab) {
    Rng rng(seed ^ 0xc0ffee123456789ull);
    std::array<int32_t, 7> idx{};
    auto slots = vocab.slots();
    for (size_t i = 0; i < slots.size(); ++i)
        idx[i] = (int32_t)rng.below(slots[i]->size());
    return diff::Condition::from_indices(idx, vocab);
}

GaussianSet fit_gaussians(const std::vector<raster::Image>& targets,
                          const std::vector<geo::Camera>& cameras, const Rig& rig,
                          const RunConfig& cfg, FitReport* report) {
    if (targets.size() != cameras.size() || targets.empty())
        throw std::invalid_argument("fit_gaussians: need one camera per target view");
    const auto& a = rig.anchors;
    int64_t n = (int64_t)a.positions.size();
    std::vector<Eigen::Matrix3f> rotations;
    rotations.reserve((size_t)n);
    for (const auto& nrm : a.normals) rotations.push_back(geo::normal_frame(nrm));

    ad::ParamRegistry<float> reg;
    auto raw = reg.add("raw", Tensor::zeros({n, 9})); // neutral init: constraint midpoints
    ad::AdamW<float> opt(reg, cfg.fit_lr);

    std::vector<Var> target_vars;
    for (const auto& img : targets) target_vars.push_back(Var::constant(img.tensor()));
    auto bg = rig.background;

    for (int it = 0; it < cfg.fit_iters; ++it) {
        reg.zero_grads();
        auto params = heads::constrain_outputs(raw, a.regions, cfg.ranges);
        Var total;
        for (size_t v = 0; v < targets.size(); ++v) {
            auto img = raster::render(params.delta, params.scale, params.color, a.positions,
                                      rotations, cameras[v], rig.background, rig.raster);
            auto l = raster::render_loss(img, target_vars[v]);
            total = v == 0 ? l : ad::add(total, l);
        }
        total = ad::scale(total, 1.f / (float)targets.size());
        double lv = loss_scalar(total);
        if (!std::isfinite(lv))
            throw std::runtime_error("fit_gaussians: non-finite loss at iteration " +
                                     std::to_string(it));
        if (report) report->losses.push_back(lv);
        ad::backward(total);
        opt.step();
    }

    ad::NoGrad guard;
    auto params = heads::constrain_outputs(raw, a.regions, cfg.ranges);
    GaussianSet g;
    g.anchors = a.positions;
    g.rotations = std::move(rotations);
    g.regions = a.regions;
    g.delta = params.delta.value();
    g.scale = params.scale.value();
    g.color = params.color.value();
    return g;
}

UpliftModel make_uplift_model(const Rig& rig, const RunConfig& cfg, bool text_mode,
                              uint64_t seed) {
    UpliftModel m;
    m.text_mode = text_mode;
    m.acfg.heads = text_mode ? cfg.twin_heads : cfg.uplift_heads;
    m.acfg.dim = cfg.uplift_dim;
    m.acfg.pe_frequencies = cfg.pe_frequencies;
    int64_t C = text_mode ? 34 : cfg.grid_channels;
    // text mode: one token per attribute slot, so the cross-attention has
    // per-slot structure to mix spatially instead of a single collapsed cell
    m.grid_dims.height = text_mode ? 7 : cfg.grid_size;
    m.grid_dims.width = text_mode ? 1 : cfg.grid_size;
    m.grid_dims.channels = C;
    m.regions = rig.anchors.regions;
    m.ranges = cfg.ranges;
    m.shape_dims = cfg.shape_dims;

    m.X0 = positions_tensor(rig.anchors.positions);
    // topology comes from the config only, so a checkpoint written by one
    // process can be restored onto a freshly built model in another
    auto sub = geo::farthest_point_subsample(rig.anchors.positions, cfg.uplift_subset,
                                             cfg.anchor_seed + 3);
    m.X0sub = positions_tensor(sub.points);
    m.up_graph = geo::knn_indices(rig.anchors.positions, sub.points, cfg.knn_k);
    m.self_graph =
        geo::knn_indices(rig.anchors.positions, rig.anchors.positions, cfg.knn_k, true);

    Rng rng(seed + 101);
    m.uplift = attn::make_uplift_weights(m.reg, "uplift", m.acfg, C, rng);
    m.up = attn::make_upsample_weights(m.reg, "upsample", m.acfg, rng);
    for (int l = 0; l < cfg.self_attn_layers; ++l)
        m.self_layers.push_back(
            attn::make_self_attn_weights(m.reg, "self" + std::to_string(l), m.acfg, C, rng));
    m.head = heads::make_regression_weights(m.reg, "head", C, rng);
    int64_t shape_in = text_mode ? 7 * 34 : C + m.grid_dims.cells();
    m.shape = heads::make_shape_mlp(m.reg, "shape", shape_in, 64, cfg.shape_dims, rng);
    return m;
}

UpliftOutput uplift_forward(UpliftModel& m, const Var& grid) {
    auto Fsub = attn::uplift_cross_attention(m.X0sub, m.grid_dims, grid, m.uplift, m.acfg);
    auto F = attn::upsample_attention(m.X0, m.X0sub, m.up_graph, Fsub, m.up, m.acfg);
    for (auto& layer : m.self_layers)
        F = ad::add(F, attn::knn_self_attention(m.X0, F, m.self_graph, layer, m.acfg));
    UpliftOutput out;
    out.params = heads::regress_gaussians(F, m.regions, m.ranges, m.head);
    out.beta = m.text_mode
                   ? heads::predict_shape_from_text(ad::reshape(grid, {1, 7 * 34}), m.shape)
                   : heads::predict_shape(m.grid_dims, grid, m.shape);
    return out;
}

GaussianSet materialize(const Rig& rig, const heads::GaussianHeads<float>& params,
                        const std::vector<float>& beta) {
    GaussianSet g;
    g.anchors = geo::anchors_for_beta(rig.anchors, beta, (int32_t)beta.size());
    g.rotations.reserve(rig.anchors.normals.size());
    for (const auto& nrm : rig.anchors.normals) g.rotations.push_back(geo::normal_frame(nrm));
    g.regions = rig.anchors.regions;
    g.delta = params.delta.value();
    g.scale = params.scale.value();
    g.color = params.color.value();
    return g;
}

Tensor text_token_grid(const diff::Condition& cond, const diff::ConditionVocab& vocab) {
    auto enc = cond.encode(vocab);
    auto slots = vocab.slots();
    Tensor grid = Tensor::zeros({(int64_t)slots.size(), enc.numel()});
    int64_t off = 0;
    for (size_t s = 0; s < slots.size(); ++s) {
        int64_t w = (int64_t)slots[s]->size();
        for (int64_t j = 0; j < w; ++j)
            grid.data[(int64_t)s * enc.numel() + off + j] = enc.data[off + j];
        off += w;
    }
    return grid;
}

std::vector<raster::Image> multiview_regularize(UpliftModel& twin, const Rig& rig,
                                                const diff::Condition& cond,
                                                const diff::ConditionVocab& vocab) {
    if (!twin.text_mode)
        throw std::invalid_argument("multiview_regularize: model is not text-conditioned");
    ad::NoGrad guard;
    auto out = uplift_forward(twin, Var::constant(text_token_grid(cond, vocab)));
    std::vector<float> beta(out.beta.value().data.begin(), out.beta.value().data.end());
    auto g = materialize(rig, out.params, beta);
    std::vector<raster::Image> views;
    for (const auto& cam : rig.cameras)
        views.push_back(raster::render_image(g, cam, rig.background, rig.raster));
    return views;
}

namespace {

Var beta_mse(const Var& beta, const std::vector<float>& beta_gt) {
    Tensor gt({1, (int64_t)beta_gt.size()}, {beta_gt.begin(), beta_gt.end()});
    auto d = ad::sub(beta, Var::constant(gt));
    return ad::mean_all(ad::mul(d, d));
}

struct DivergenceWatch {
    double initial = -1.;
    int streak = 0;
    void observe(double loss, int step) {
        if (initial < 0.) initial = std::max(loss, 1e-12);
        streak = loss > 10. * initial ? streak + 1 : 0;
        if (streak >= 100)
            throw std::runtime_error("training diverged: loss > 10x initial for 100 steps, at step " +
                                     std::to_string(step));
    }
};

} // namespace

TrainReport train_uplift(UpliftModel& model, const std::vector<SyntheticSample>& data,
                         const Rig& rig, const RunConfig& cfg, UpliftModel* twin) {
    if (data.empty()) throw std::invalid_argument("train_uplift: empty dataset");
    if (model.text_mode) throw std::invalid_argument("train_uplift: model is text-conditioned");
    auto bg = rig.background;

    struct Prepared {
        Var grid, front;
        std::vector<Var> twin_views;
        std::vector<geo::Vec3> anchors;
    };
    std::vector<Prepared> prep;
    for (const auto& s : data) {
        Prepared p;
        p.grid = Var::constant(s.feature_grid);
        p.front = Var::constant(s.views[0].tensor());
        p.anchors = geo::anchors_for_beta(rig.anchors, s.beta_gt, cfg.shape_dims);
        if (twin) {
            auto views = multiview_regularize(*twin, rig, s.attributes, diff::ConditionVocab{});
            for (const auto& v : views) p.twin_views.push_back(Var::constant(v.tensor()));
        }
        prep.push_back(std::move(p));
    }
    std::vector<Eigen::Matrix3f> rotations;
    for (const auto& nrm : rig.anchors.normals) rotations.push_back(geo::normal_frame(nrm));

    ad::AdamW<float> opt(model.reg, cfg.uplift_lr);
    TrainReport rep;
    DivergenceWatch watch;
    for (int step = 0; step < cfg.uplift_steps; ++step) {
        size_t idx = (size_t)(step % (int)data.size());
        model.reg.zero_grads();
        auto out = uplift_forward(model, prep[idx].grid);
        auto img = raster::render(out.params.delta, out.params.scale, out.params.color,
                                  prep[idx].anchors, rotations, rig.cameras[0], rig.background, rig.raster);
        auto loss = raster::render_loss(img, prep[idx].front);
        if (twin) {
            Var twin_term;
            for (size_t v = 0; v < prep[idx].twin_views.size(); ++v) {
                auto tv = raster::render(out.params.delta, out.params.scale, out.params.color,
                                         prep[idx].anchors, rotations, rig.cameras[v], bg,
                                         rig.raster);
                auto l = raster::render_loss(tv, prep[idx].twin_views[v]);
                twin_term = v == 0 ? l : ad::add(twin_term, l);
            }
            loss = ad::add(loss, ad::scale(twin_term, cfg.twin_weight / 4.f));
        }
        loss = ad::add(loss, ad::scale(beta_mse(out.beta, data[idx].beta_gt), cfg.beta_weight));
        double lv = loss_scalar(loss);
        if (!std::isfinite(lv))
            throw std::runtime_error("train_uplift: non-finite loss at step " +
                                     std::to_string(step));
        watch.observe(lv, step);
        if (step == 0) rep.first_loss = lv;
        rep.last_loss = lv;
        ++rep.steps;
        ad::backward(loss);
        opt.step();
    }
    return rep;
}

TrainReport train_text_twin(UpliftModel& twin, const std::vector<SyntheticSample>& data,
                            const Rig& rig, const RunConfig& cfg,
                            const diff::ConditionVocab& vocab) {
    if (data.empty()) throw std::invalid_argument("train_text_twin: empty dataset");
    if (!twin.text_mode) throw std::invalid_argument("train_text_twin: model is not text-conditioned");
    auto bg = rig.background;

    struct Prepared {
        Var grid;
        std::vector<Var> views;
        std::vector<geo::Vec3> anchors;
    };
    std::vector<Prepared> prep;
    for (const auto& s : data) {
        Prepared p;
        p.grid = Var::constant(text_token_grid(s.attributes, vocab));
        for (const auto& v : s.views) p.views.push_back(Var::constant(v.tensor()));
        p.anchors = geo::anchors_for_beta(rig.anchors, s.beta_gt, cfg.shape_dims);
        prep.push_back(std::move(p));
    }
    std::vector<Eigen::Matrix3f> rotations;
    for (const auto& nrm : rig.anchors.normals) rotations.push_back(geo::normal_frame(nrm));

    ad::AdamW<float> opt(twin.reg, cfg.uplift_lr);
    TrainReport rep;
    DivergenceWatch watch;
    for (int step = 0; step < cfg.uplift_steps; ++step) {
        size_t idx = (size_t)(step % (int)data.size());
        twin.reg.zero_grads();
        auto out = uplift_forward(twin, prep[idx].grid);
        Var loss;
        for (size_t v = 0; v < prep[idx].views.size(); ++v) {
            auto img = raster::render(out.params.delta, out.params.scale, out.params.color,
                                      prep[idx].anchors, rotations, rig.cameras[v], bg,
                                      rig.raster);
            auto l = raster::render_loss(img, prep[idx].views[v]);
            loss = v == 0 ? l : ad::add(loss, l);
        }
        loss = ad::scale(loss, 0.25f);
        loss = ad::add(loss, ad::scale(beta_mse(out.beta, data[idx].beta_gt), cfg.beta_weight));
        double lv = loss_scalar(loss);
        if (!std::isfinite(lv))
            throw std::runtime_error("train_text_twin: non-finite loss at step " +
                                     std::to_string(step));
        watch.observe(lv, step);
        if (step == 0) rep.first_loss = lv;
        rep.last_loss = lv;
        ++rep.steps;
        ad::backward(loss);
        opt.step();
    }
    return rep;
}

DiffusionModel make_diffusion_model(const Rig& rig, const RunConfig& cfg) {
    auto sub = geo::farthest_point_subsample(rig.anchors.positions, cfg.diffusion_points,
                                             cfg.seed + 7);
    diff::DenoiserConfig dcfg;
    dcfg.levels = cfg.denoiser_levels;
    dcfg.widths.clear();
    for (int l = 0; l < cfg.denoiser_levels; ++l)
        dcfg.widths.push_back((int64_t)cfg.denoiser_width << l);
    dcfg.subsample_ratio = cfg.denoiser_ratio;
    dcfg.k = cfg.knn_k;
    dcfg.time_dim = cfg.time_dim;
    dcfg.attn.heads = cfg.denoiser_heads;
    dcfg.attn.dim = cfg.denoiser_dim;
    dcfg.attn.pe_frequencies = cfg.pe_frequencies;
    dcfg.channels = 9;
    dcfg.cond_dim = 34;

    Rng rng(cfg.seed + 31);
    DiffusionModel m{dcfg,
                     diff::build_denoiser_graphs(positions_tensor(sub.points), dcfg, cfg.seed + 13),
                     diff::make_denoiser<float>(dcfg, rng),
                     {},
                     diff::build_schedule(cfg.diffusion_T, cfg.beta_1, cfg.beta_T),
                     sub.origin_indices,
                     {}};
    for (int32_t i : sub.origin_indices) m.regions.push_back(rig.anchors.regions[(size_t)i]);
    return m;
}

Tensor subset_params(const Tensor& params, const std::vector<int32_t>& indices) {
    Tensor out({(int64_t)indices.size(), 9});
    for (size_t i = 0; i < indices.size(); ++i)
        for (int c = 0; c < 9; ++c)
            out.data[(int64_t)i * 9 + c] = params.data[(int64_t)indices[i] * 9 + c];
    return out;
}

TrainReport train_diffusion(DiffusionModel& model, const std::vector<SyntheticSample>& corpus,
                            const RunConfig& cfg, const diff::ConditionVocab& vocab) {
    if ((int64_t)corpus.size() < cfg.batch)
        throw std::invalid_argument("train_diffusion: corpus smaller than a batch");

    std::vector<Tensor> subs;
    for (const auto& s : corpus) subs.push_back(subset_params(s.gt_params, model.anchor_indices));
    model.stats = diff::ParamStats::from_corpus(subs);
    model.stats.validate();
    std::vector<Tensor> x0s;
    std::vector<Tensor> encs;
    for (size_t i = 0; i < subs.size(); ++i) {
        x0s.push_back(diff::normalize_params(subs[i], model.stats));
        encs.push_back(corpus[i].attributes.encode(vocab));
    }
    Tensor null_enc({34});

    ad::AdamW<float> opt(model.net.reg, cfg.diffusion_lr);
    Rng rng(cfg.seed + 97);
    TrainReport rep;
    DivergenceWatch watch;
    for (int step = 0; step < cfg.diffusion_steps; ++step) {
        size_t idx = (size_t)rng.below(x0s.size());
        int t = (int)rng.below((uint64_t)model.sched.T) + 1;
        Tensor noise(x0s[idx].shape);
        for (auto& v : noise.data) v = (float)rng.normal();
        const Tensor& cond = rng.uniform01() < cfg.p_drop ? null_enc : encs[idx];

        model.net.reg.zero_grads();
        auto loss = diff::train_step_loss(x0s[idx], t, noise, cond, model.graphs, model.net,
                                          model.sched);
        double lv = loss_scalar(loss);
        if (!std::isfinite(lv))
            throw std::runtime_error("train_diffusion: non-finite loss at step " +
                                     std::to_string(step));
        watch.observe(lv, step);
        if (step == 0) rep.first_loss = lv;
        rep.last_loss = lv;
        ++rep.steps;
        ad::backward(loss);
        opt.step();
    }
    return rep;
}

Tensor clamp_params(const Tensor& params, const std::vector<geo::Region>& regions,
                    const ConstraintRanges& ranges) {
    int64_t n = params.dim(0);
    if ((int64_t)regions.size() != n)
        throw std::invalid_argument("clamp_params: region labels != row count");
    Tensor out = params;
    for (int64_t i = 0; i < n; ++i) {
        float db = ranges.disp_bound(regions[(size_t)i]);
        float sb = ranges.scale_bound(regions[(size_t)i]);
        for (int c = 0; c < 3; ++c) {
            out.data[i * 9 + c] = std::clamp(out.data[i * 9 + c], -db, db);
            out.data[i * 9 + 3 + c] = std::clamp(out.data[i * 9 + 3 + c], ranges.s_min, sb);
            out.data[i * 9 + 6 + c] = std::clamp(out.data[i * 9 + 6 + c], 0.f, 1.f);
        }
    }
    return out;
}

Tensor sample_params(DiffusionModel& model, const diff::Condition& cond, float guidance,
                     uint64_t seed, const RunConfig& cfg, const diff::ConditionVocab& vocab) {
    model.stats.validate();
    auto enc = cond.encode(vocab);
    auto x = diff::cfg_sample(model.net, enc, guidance, model.sched, seed, model.graphs);
    auto denorm = diff::denormalize_params(x, model.stats);
    return clamp_params(denorm, model.regions, cfg.ranges);
}

Eigen::Vector3f mean_part_color(const Tensor& params, const std::vector<int32_t>& part_tags,
                                const std::vector<geo::Part>& parts) {
    if ((int64_t)part_tags.size() != params.dim(0))
        throw std::invalid_argument("mean_part_color: part tags != row count");
    Eigen::Vector3f acc{0.f, 0.f, 0.f};
    int64_t count = 0;
    for (int64_t i = 0; i < params.dim(0); ++i) {
        bool hit = false;
        for (auto p : parts) hit = hit || part_tags[(size_t)i] == (int32_t)p;
        if (!hit) continue;
        for (int c = 0; c < 3; ++c) acc[c] += params.data[i * 9 + 6 + c];
        ++count;
    }
    if (count == 0) throw std::invalid_argument("mean_part_color: no splats in those parts");
    return acc / (float)count;
}

bool top_color_aligned(const Tensor& params, const std::vector<int32_t>& part_tags,
                       const diff::Condition& cond) {
    if (cond.is_null) throw std::invalid_argument("top_color_aligned: null condition");
    auto mean = mean_part_color(params, part_tags, {geo::Part::Torso});
    return nearest_vocab_color(mean) == cond.attr[4];
}

diff::Checkpoint model_checkpoint(const UpliftModel& model, const diff::ConditionVocab& vocab) {
    diff::Checkpoint c;
    c.kind = model.text_mode ? diff::CheckpointKind::TextTwin : diff::CheckpointKind::Uplift;
    c.vocab_hash = model.text_mode ? vocab.hash() : 0;
    c.put_registry(model.reg);
    return c;
}

void load_model(UpliftModel& model, const diff::Checkpoint& ckpt) {
    auto want = model.text_mode ? diff::CheckpointKind::TextTwin : diff::CheckpointKind::Uplift;
    if (ckpt.kind != want)
        throw std::runtime_error("checkpoint kind does not match the model");
    ckpt.load_into(model.reg);
}

diff::Checkpoint model_checkpoint(const DiffusionModel& model,
                                  const diff::ConditionVocab& vocab) {
    diff::Checkpoint c;
    c.kind = diff::CheckpointKind::Diffusion;
    c.vocab_hash = vocab.hash();
    c.schedule = diff::ScheduleConfig{model.sched.T, model.sched.beta_t(1),
                                      model.sched.beta_t(model.sched.T)};
    c.stats = model.stats;
    c.put_registry(model.net.reg);
    return c;
}

void load_model(DiffusionModel& model, const diff::Checkpoint& ckpt) {
    if (ckpt.kind != diff::CheckpointKind::Diffusion)
        throw std::runtime_error("checkpoint kind does not match the model");
    if (!ckpt.stats) throw std::runtime_error("diffusion checkpoint missing parameter stats");
    model.stats = *ckpt.stats;
    if (ckpt.schedule)
        model.sched = diff::build_schedule(ckpt.schedule->T, ckpt.schedule->beta_1,
                                           ckpt.schedule->beta_T);
    ckpt.load_into(model.net.reg);
}

} // namespace sg::pipe

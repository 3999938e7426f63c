// Command-line driver for the full pipeline: synthetic data generation, splat
// fitting, reconstruction-model training, diffusion training, guided sampling,
// rendering and evaluation. Every command is deterministic given (config, seed).

#include "splatgen/pipeline/pipeline.hpp"
#include "splatgen/raster/losses.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace sg;

namespace {

const char* kViewNames[4] = {"front", "back", "left", "right"};

/// Paths created by the running command; removed again if it fails.
std::vector<fs::path> g_created;

void note_created(const fs::path& p) { g_created.push_back(p); }

void cleanup_partial_outputs() {
    for (auto it = g_created.rbegin(); it != g_created.rend(); ++it) {
        std::error_code ec;
        fs::remove_all(*it, ec);
    }
}

void save_png_atomic(const raster::Image& img, const fs::path& path) {
    fs::path tmp = path;
    tmp += ".tmp";
    raster::save_png(img, tmp.string());
    fs::rename(tmp, path);
    note_created(path);
}

void save_checkpoint_noted(const fs::path& path, const diff::Checkpoint& ckpt) {
    diff::save_checkpoint(path.string(), ckpt); // already writes temp + rename
    note_created(path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << text;
    }
    fs::rename(tmp, path);
    note_created(path);
}

pipe::RunConfig load_config(const std::string& config_path,
                            const std::optional<uint64_t>& seed_override) {
    pipe::RunConfig cfg =
        config_path.empty() ? pipe::RunConfig{} : pipe::RunConfig::load(config_path);
    if (seed_override) cfg.seed = *seed_override;
    cfg.validate();
    return cfg;
}

json condition_json(const diff::Condition& cond, const diff::ConditionVocab& vocab) {
    auto slots = vocab.slots();
    static const char* names[7] = {"race",      "gender",        "hair",        "top",
                                   "top_color", "trouser_color", "trainer_color"};
    json j;
    for (size_t i = 0; i < 7; ++i)
        j[names[i]] = (*slots[i])[(size_t)cond.attr[i]];
    return j;
}

diff::Condition condition_from_json(const json& j, const diff::ConditionVocab& vocab) {
    static const char* names[7] = {"race",      "gender",        "hair",        "top",
                                   "top_color", "trouser_color", "trainer_color"};
    std::array<std::string, 7> vals;
    for (size_t i = 0; i < 7; ++i) vals[i] = j.at(names[i]).get<std::string>();
    return diff::Condition::from_names(vals, vocab);
}

struct LoadedSample {
    pipe::SyntheticSample sample;
    fs::path dir;
};

pipe::SyntheticSample load_sample(const fs::path& dir, const pipe::RunConfig& cfg,
                                  const diff::ConditionVocab& vocab) {
    pipe::SyntheticSample s;
    std::ifstream meta_in(dir / "meta.json");
    if (!meta_in) throw std::runtime_error("missing meta.json in " + dir.string());
    json meta = json::parse(meta_in);
    s.attributes = condition_from_json(meta.at("attributes"), vocab);
    s.beta_gt = meta.at("beta").get<std::vector<float>>();
    for (int v = 0; v < 4; ++v)
        s.views.push_back(
            raster::load_png((dir / (std::string(kViewNames[v]) + ".png")).string()));
    auto ckpt = diff::load_checkpoint((dir / "params.bin").string());
    s.gt_params = ckpt.tensors.at("params");
    s.feature_grid = pipe::build_feature_grid(s.views[0], cfg);
    return s;
}

std::vector<pipe::SyntheticSample> load_dataset(const fs::path& dir,
                                                const pipe::RunConfig& cfg,
                                                const diff::ConditionVocab& vocab) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_directory() && e.path().filename().string().rfind("sample_", 0) == 0)
            dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw std::runtime_error("no sample_* directories under " + dir.string());
    std::vector<pipe::SyntheticSample> data;
    for (const auto& d : dirs) data.push_back(load_sample(d, cfg, vocab));
    return data;
}

GaussianSet set_from_params(const pipe::Rig& rig, const ad::Tensor& params) {
    GaussianSet g;
    g.anchors = rig.anchors.positions;
    for (const auto& nrm : rig.anchors.normals) g.rotations.push_back(geo::normal_frame(nrm));
    g.regions = rig.anchors.regions;
    g.unpack_params(params);
    return g;
}

void render_four_views(const GaussianSet& g, const pipe::Rig& rig, const fs::path& out_dir) {
    for (int v = 0; v < 4; ++v) {
        auto img = raster::render_image(g, rig.cameras[(size_t)v], rig.background, rig.raster);
        save_png_atomic(img, out_dir / (std::string(kViewNames[v]) + ".png"));
    }
}

int run_gen_data(const pipe::RunConfig& cfg, const std::string& out_dir, int64_t count) {
    diff::ConditionVocab vocab;
    auto rig = pipe::build_rig(cfg);
    fs::create_directories(out_dir);
    write_text_atomic(fs::path(out_dir) / "run.cfg", cfg.to_text());
    for (int64_t i = 0; i < count; ++i) {
        uint64_t seed = cfg.seed + (uint64_t)i;
        auto cond = pipe::random_condition(seed, vocab);
        auto s = pipe::generate_synthetic_sample(seed, cond, rig, cfg);
        char name[32];
        std::snprintf(name, sizeof(name), "sample_%04lld", (long long)i);
        fs::path dir = fs::path(out_dir) / name;
        fs::create_directories(dir);
        note_created(dir);
        for (int v = 0; v < 4; ++v)
            save_png_atomic(s.views[(size_t)v], dir / (std::string(kViewNames[v]) + ".png"));
        diff::Checkpoint ckpt;
        ckpt.kind = diff::CheckpointKind::GaussianFit;
        ckpt.tensors["params"] = s.gt_params;
        save_checkpoint_noted(dir / "params.bin", ckpt);
        json meta;
        meta["seed"] = seed;
        meta["attributes"] = condition_json(cond, vocab);
        meta["beta"] = s.beta_gt;
        write_text_atomic(dir / "meta.json", meta.dump(2) + "\n");
    }
    std::cout << "wrote " << count << " samples to " << out_dir << "\n";
    return 0;
}

int run_fit(const pipe::RunConfig& cfg, const std::string& sample_dir,
            const std::string& out_path) {
    diff::ConditionVocab vocab;
    auto rig = pipe::build_rig(cfg);
    auto s = load_sample(sample_dir, cfg, vocab);
    pipe::FitReport rep;
    auto g = pipe::fit_gaussians(s.views, rig.cameras, rig, cfg, &rep);
    diff::Checkpoint ckpt;
    ckpt.kind = diff::CheckpointKind::GaussianFit;
    ckpt.tensors["params"] = g.pack_params();
    save_checkpoint_noted(out_path, ckpt);
    double final_loss = rep.losses.empty() ? 0.0 : rep.losses.back();
    std::cout << "fit " << cfg.fit_iters << " iters, final loss " << final_loss << ", wrote "
              << out_path << "\n";
    return 0;
}

int run_train_uplift(const pipe::RunConfig& cfg, const std::string& data_dir,
                     const std::string& out_path, const std::string& twin_path) {
    diff::ConditionVocab vocab;
    auto rig = pipe::build_rig(cfg);
    auto data = load_dataset(data_dir, cfg, vocab);
    auto model = pipe::make_uplift_model(rig, cfg, false, cfg.seed);
    std::optional<pipe::UpliftModel> twin;
    if (!twin_path.empty()) {
        twin.emplace(pipe::make_uplift_model(rig, cfg, true, cfg.seed));
        pipe::load_model(*twin, diff::load_checkpoint(twin_path, vocab.hash()));
    }
    auto rep = pipe::train_uplift(model, data, rig, cfg, twin ? &*twin : nullptr);
    save_checkpoint_noted(out_path, pipe::model_checkpoint(model, vocab));
    std::cout << "trained uplift " << rep.steps << " steps, loss " << rep.first_loss << " -> "
              << rep.last_loss << ", wrote " << out_path << "\n";
    return 0;
}

int run_train_twin(const pipe::RunConfig& cfg, const std::string& data_dir,
                   const std::string& out_path) {
    diff::ConditionVocab vocab;
    auto rig = pipe::build_rig(cfg);
    auto data = load_dataset(data_dir, cfg, vocab);
    auto twin = pipe::make_uplift_model(rig, cfg, true, cfg.seed);
    auto rep = pipe::train_text_twin(twin, data, rig, cfg, vocab);
    save_checkpoint_noted(out_path, pipe::model_checkpoint(twin, vocab));
    std::cout << "trained twin " << rep.steps << " steps, loss " << rep.first_loss << " -> "
              << rep.last_loss << ", wrote " << out_path << "\n";
    return 0;
}

int run_train_diffusion(const pipe::RunConfig& cfg, const std::string& data_dir,
                        const std::string& out_path) {
    diff::ConditionVocab vocab;
    auto rig = pipe::build_rig(cfg);
    auto data = load_dataset(data_dir, cfg, vocab);
    auto model = pipe::make_diffusion_model(rig, cfg);
    auto rep = pipe::train_diffusion(model, data, cfg, vocab);
    save_checkpoint_noted(out_path, pipe::model_checkpoint(model, vocab));
    std::cout << "trained diffusion " << rep.steps << " steps, loss " << rep.first_loss
              << " -> " << rep.last_loss << ", wrote " << out_path << "\n";
    return 0;
}

int run_sample(const pipe::RunConfig& cfg, const std::string& model_path,
               const std::string& out_dir, const std::array<std::string, 7>& prompt,
               float guidance) {
    diff::ConditionVocab vocab;
    auto cond = diff::Condition::from_names(prompt, vocab);
    auto rig = pipe::build_rig(cfg);
    auto model = pipe::make_diffusion_model(rig, cfg);
    pipe::load_model(model, diff::load_checkpoint(model_path, vocab.hash()));

    auto params = pipe::sample_params(model, cond, guidance, cfg.seed, cfg, vocab);
    fs::create_directories(out_dir);
    diff::Checkpoint out;
    out.kind = diff::CheckpointKind::GaussianFit;
    out.vocab_hash = vocab.hash();
    out.tensors["params"] = params;
    save_checkpoint_noted(fs::path(out_dir) / "params.bin", out);

    GaussianSet g;
    for (int32_t i : model.anchor_indices) {
        g.anchors.push_back(rig.anchors.positions[(size_t)i]);
        g.rotations.push_back(geo::normal_frame(rig.anchors.normals[(size_t)i]));
    }
    g.regions = model.regions;
    g.unpack_params(params);
    render_four_views(g, rig, out_dir);
    std::cout << "sampled " << params.dim(0) << " splats (guidance " << guidance
              << ", seed " << cfg.seed << ") into " << out_dir << "\n";
    return 0;
}

int run_render(const pipe::RunConfig& cfg, const std::string& params_path,
               const std::string& out_dir) {
    auto rig = pipe::build_rig(cfg);
    auto ckpt = diff::load_checkpoint(params_path);
    auto g = set_from_params(rig, ckpt.tensors.at("params"));
    fs::create_directories(out_dir);
    render_four_views(g, rig, out_dir);
    std::cout << "rendered 4 views into " << out_dir << "\n";
    return 0;
}

std::string psnr_string(double v) {
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

int run_eval(const pipe::RunConfig& cfg, const std::string& pred_dir,
             const std::string& target_dir, const std::string& params_path,
             const std::string& prompt_top_color) {
    (void)cfg;
    std::vector<fs::path> preds;
    for (const auto& e : fs::directory_iterator(pred_dir))
        if (e.path().extension() == ".png") preds.push_back(e.path());
    std::sort(preds.begin(), preds.end());
    if (preds.empty()) throw std::runtime_error("no .png files in " + pred_dir);

    double mean_psnr = 0., mean_ssim = 0.;
    int64_t finite_psnr = 0;
    for (const auto& p : preds) {
        fs::path t = fs::path(target_dir) / p.filename();
        auto a = raster::load_png(p.string());
        auto b = raster::load_png(t.string());
        double ps = raster::psnr(a, b);
        auto sv = raster::ssim(pipe::Var::constant(a.tensor()), pipe::Var::constant(b.tensor()));
        double ss = (double)sv.value().data[0];
        std::cout << p.filename().string() << ": psnr " << psnr_string(ps) << " ssim " << ss
                  << "\n";
        if (std::isfinite(ps)) {
            mean_psnr += ps;
            ++finite_psnr;
        }
        mean_ssim += ss;
    }
    std::cout << "mean: psnr "
              << (finite_psnr == (int64_t)preds.size()
                      ? psnr_string(mean_psnr / (double)finite_psnr)
                      : "inf")
              << " ssim " << mean_ssim / (double)preds.size() << "\n";

    if (!params_path.empty()) {
        if (prompt_top_color.empty())
            throw std::runtime_error("--prompt-top-color is required with --params");
        diff::ConditionVocab vocab;
        auto ckpt = diff::load_checkpoint(params_path);
        const auto& params = ckpt.tensors.at("params");
        // the torso mean color against the prompted reference
        pipe::RunConfig rc = cfg;
        auto rig = pipe::build_rig(rc);
        std::vector<int32_t> parts;
        if (params.dim(0) == (int64_t)rig.anchors.parts.size()) {
            parts = rig.anchors.parts;
        } else {
            auto sub = geo::farthest_point_subsample(rig.anchors.positions, params.dim(0),
                                                     rc.seed + 7);
            for (int32_t i : sub.origin_indices)
                parts.push_back(rig.anchors.parts[(size_t)i]);
        }
        int want = -1;
        for (size_t i = 0; i < vocab.color.size(); ++i)
            if (vocab.color[i] == prompt_top_color) want = (int)i;
        if (want < 0) throw std::runtime_error("unknown color '" + prompt_top_color + "'");
        auto mean = pipe::mean_part_color(params, parts, {geo::Part::Torso});
        int got = pipe::nearest_vocab_color(mean);
        std::cout << "attribute-alignment: " << (got == want ? 1 : 0) << " (nearest color "
                  << vocab.color[(size_t)got] << ")\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale text-to-3D human splat pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<uint64_t> seed_override;
    app.add_option("--config", config_path, "path to a key=value config file")
        ->capture_default_str();
    app.add_option("--seed", seed_override, "override the config seed");

    auto* gen = app.add_subcommand("gen-data", "generate a procedural dataset");
    std::string gen_out = "data";
    int64_t gen_count = -1;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--count", gen_count, "sample count (default: config dataset_size)");

    auto* fit = app.add_subcommand("fit", "fit splat parameters to one sample's views");
    std::string fit_sample, fit_out = "fit.bin";
    fit->add_option("--sample", fit_sample, "sample directory")->required();
    fit->add_option("--out", fit_out, "output checkpoint");

    auto* tu = app.add_subcommand("train-uplift", "train the image-conditioned model");
    std::string tu_data, tu_out = "uplift.bin", tu_twin;
    tu->add_option("--data", tu_data, "dataset directory")->required();
    tu->add_option("--out", tu_out, "output checkpoint");
    tu->add_option("--twin", tu_twin, "text-twin checkpoint for multi-view supervision");

    auto* tt = app.add_subcommand("train-twin", "train the text-conditioned twin");
    std::string tt_data, tt_out = "twin.bin";
    tt->add_option("--data", tt_data, "dataset directory")->required();
    tt->add_option("--out", tt_out, "output checkpoint");

    auto* td = app.add_subcommand("train-diffusion", "train the parameter diffusion model");
    std::string td_data, td_out = "diffusion.bin";
    td->add_option("--data", td_data, "dataset directory")->required();
    td->add_option("--out", td_out, "output checkpoint");

    auto* smp = app.add_subcommand("sample", "draw a guided sample and render it");
    std::string smp_model, smp_out = "sample_out";
    std::array<std::string, 7> prompt{"white", "man",  "black", "t-shirt",
                                      "red",   "blue", "black"};
    float guidance = -1.f;
    smp->add_option("--model", smp_model, "diffusion checkpoint")->required();
    smp->add_option("--out", smp_out, "output directory");
    smp->add_option("--prompt-race", prompt[0]);
    smp->add_option("--prompt-gender", prompt[1]);
    smp->add_option("--prompt-hair", prompt[2]);
    smp->add_option("--prompt-top", prompt[3]);
    smp->add_option("--prompt-top-color", prompt[4]);
    smp->add_option("--prompt-trouser-color", prompt[5]);
    smp->add_option("--prompt-trainer-color", prompt[6]);
    smp->add_option("--guidance", guidance, "guidance scale (default: config)");

    auto* rnd = app.add_subcommand("render", "render a parameter file from the 4 views");
    std::string rnd_params, rnd_out = "render_out";
    rnd->add_option("--params", rnd_params, "parameter checkpoint")->required();
    rnd->add_option("--out", rnd_out, "output directory");

    auto* ev = app.add_subcommand("eval", "PSNR/SSIM between image sets, plus alignment");
    std::string ev_pred, ev_target, ev_params, ev_color;
    ev->add_option("--pred", ev_pred, "predicted image directory")->required();
    ev->add_option("--target", ev_target, "target image directory")->required();
    ev->add_option("--params", ev_params, "parameter checkpoint for attribute alignment");
    ev->add_option("--prompt-top-color", ev_color, "prompted top color for alignment");

    // let "--config"/"--seed" appear after the subcommand as well
    for (auto* sc : app.get_subcommands(nullptr)) sc->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = load_config(config_path, seed_override);
        if (gen->parsed())
            return run_gen_data(cfg, gen_out, gen_count < 0 ? cfg.dataset_size : gen_count);
        if (fit->parsed()) return run_fit(cfg, fit_sample, fit_out);
        if (tu->parsed()) return run_train_uplift(cfg, tu_data, tu_out, tu_twin);
        if (tt->parsed()) return run_train_twin(cfg, tt_data, tt_out);
        if (td->parsed()) return run_train_diffusion(cfg, td_data, td_out);
        if (smp->parsed())
            return run_sample(cfg, smp_model, smp_out, prompt,
                              guidance < 0.f ? cfg.guidance : guidance);
        if (rnd->parsed()) return run_render(cfg, rnd_params, rnd_out);
        if (ev->parsed()) return run_eval(cfg, ev_pred, ev_target, ev_params, ev_color);
    } catch (const std::exception& e) {
        cleanup_partial_outputs();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "splatgen/pipeline/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sg::pipe {
namespace {

struct Field {
    std::string name;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <class T>
T parse_number(const std::string& s) {
    std::istringstream in(s);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw std::invalid_argument("bad numeric value '" + s + "'");
    return v;
}

template <class T>
std::string print_number(T v) {
    std::ostringstream out;
    out.precision(9);
    out << v;
    return out.str();
}

std::vector<Field> make_fields() {
    std::vector<Field> f;
    auto reg = [&f](const std::string& name, auto access) {
        f.push_back({name,
                     [access](const RunConfig& c) {
                         return print_number(access(const_cast<RunConfig&>(c)));
                     },
                     [access](RunConfig& c, const std::string& v) {
                         auto& ref = access(c);
                         ref = parse_number<std::decay_t<decltype(ref)>>(v);
                     }});
    };
#define SG_CFG_FIELD(member) reg(#member, [](RunConfig& c) -> auto& { return c.member; })
#define SG_CFG_RANGE(member) reg(#member, [](RunConfig& c) -> auto& { return c.ranges.member; })
    SG_CFG_FIELD(anchors);
    SG_CFG_FIELD(shape_dims);
    SG_CFG_FIELD(densify_edge);
    SG_CFG_FIELD(densify_area);
    SG_CFG_FIELD(anchor_seed);
    SG_CFG_FIELD(rig_radius);
    SG_CFG_FIELD(rig_fov);
    SG_CFG_FIELD(image_size);
    SG_CFG_FIELD(background);
    SG_CFG_RANGE(disp_body);
    SG_CFG_RANGE(disp_head);
    SG_CFG_RANGE(disp_hand);
    SG_CFG_RANGE(scale_body);
    SG_CFG_RANGE(scale_head);
    SG_CFG_RANGE(scale_hand);
    SG_CFG_RANGE(s_min);
    SG_CFG_FIELD(dataset_size);
    SG_CFG_FIELD(color_noise);
    SG_CFG_FIELD(paint_scale);
    SG_CFG_FIELD(grid_size);
    SG_CFG_FIELD(grid_channels);
    SG_CFG_FIELD(feature_seed);
    SG_CFG_FIELD(fit_iters);
    SG_CFG_FIELD(fit_lr);
    SG_CFG_FIELD(uplift_heads);
    SG_CFG_FIELD(uplift_dim);
    SG_CFG_FIELD(pe_frequencies);
    SG_CFG_FIELD(uplift_subset);
    SG_CFG_FIELD(knn_k);
    SG_CFG_FIELD(self_attn_layers);
    SG_CFG_FIELD(twin_heads);
    SG_CFG_FIELD(uplift_steps);
    SG_CFG_FIELD(uplift_lr);
    SG_CFG_FIELD(twin_weight);
    SG_CFG_FIELD(beta_weight);
    SG_CFG_FIELD(batch);
    SG_CFG_FIELD(diffusion_points);
    SG_CFG_FIELD(diffusion_T);
    SG_CFG_FIELD(beta_1);
    SG_CFG_FIELD(beta_T);
    SG_CFG_FIELD(diffusion_steps);
    SG_CFG_FIELD(diffusion_lr);
    SG_CFG_FIELD(p_drop);
    SG_CFG_FIELD(denoiser_levels);
    SG_CFG_FIELD(denoiser_width);
    SG_CFG_FIELD(denoiser_ratio);
    SG_CFG_FIELD(denoiser_heads);
    SG_CFG_FIELD(denoiser_dim);
    SG_CFG_FIELD(time_dim);
    SG_CFG_FIELD(guidance);
    SG_CFG_FIELD(seed);
#undef SG_CFG_FIELD
#undef SG_CFG_RANGE
    return f;
}

const std::vector<Field>& fields() {
    static const std::vector<Field> f = make_fields();
    return f;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

} // namespace

void RunConfig::validate() const {
    ranges.validate();
    if (anchors < 16) throw std::invalid_argument("config: anchors too small");
    if (image_size < 8) throw std::invalid_argument("config: image_size too small");
    if (grid_size < 1 || grid_channels < 5)
        throw std::invalid_argument("config: feature grid too small");
    if (grid_channels % uplift_heads != 0)
        throw std::invalid_argument("config: grid_channels must divide by uplift_heads");
    if (34 % twin_heads != 0)
        throw std::invalid_argument("config: twin_heads must divide the condition length 34");
    if (uplift_subset < knn_k || uplift_subset > anchors)
        throw std::invalid_argument("config: uplift_subset out of range");
    if (batch < 1 || dataset_size < 1) throw std::invalid_argument("config: empty workload");
    if (p_drop < 0.f || p_drop > 1.f) throw std::invalid_argument("config: p_drop outside [0,1]");
    if (guidance < 0.f) throw std::invalid_argument("config: guidance must be >= 0");
    if (background < 0.f || background > 1.f)
        throw std::invalid_argument("config: background outside [0,1]");
    if (denoiser_levels < 1 || denoiser_ratio < 2 || denoiser_width < denoiser_heads)
        throw std::invalid_argument("config: bad denoiser layout");
    if (denoiser_width % denoiser_heads != 0)
        throw std::invalid_argument("config: denoiser_width must divide by denoiser_heads");
    if (diffusion_T < 1 || beta_1 <= 0.f || beta_T < beta_1 || beta_T >= 1.f)
        throw std::invalid_argument("config: bad diffusion schedule");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const auto& f : fields())
        if (f.name == key) {
            f.set(*this, value);
            return;
        }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
    RunConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key=value");
        cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.validate();
    return cfg;
}

std::string RunConfig::to_text() const {
    std::ostringstream out;
    for (const auto& f : fields()) out << f.name << " = " << f.get(*this) << "\n";
    return out.str();
}

void RunConfig::save(const std::string& path) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("config: cannot write '" + tmp + "'");
        out << to_text();
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("config: rename failed for '" + path + "'");
}

} // namespace sg::pipe

#include "splatgen/diffusion/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace sg::diff {

namespace {

constexpr uint32_t kMagic = 0x53474B31; // "SGK1"
constexpr uint8_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint32_t>(os, (uint32_t)s.size());
    os.write(s.data(), (std::streamsize)s.size());
}

std::string get_string(std::istream& is) {
    uint32_t n = get<uint32_t>(is);
    if (n > (1u << 20)) throw std::runtime_error("checkpoint: implausible string length");
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

} // namespace

void Checkpoint::put_registry(const ad::ParamRegistry<float>& reg) {
    for (const auto& [name, var] : reg.entries()) tensors[name] = var.value();
}

void Checkpoint::load_into(ad::ParamRegistry<float>& reg) const {
    for (auto& [name, var] : reg.entries()) {
        auto it = tensors.find(name);
        if (it == tensors.end())
            throw std::runtime_error("checkpoint: missing tensor '" + name + "'");
        if (it->second.shape != var.value().shape)
            throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
        var.node()->value = it->second;
    }
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp);
        put(os, kMagic);
        put(os, kVersion);
        put(os, (uint8_t)ckpt.kind);
        uint8_t flags = (ckpt.schedule ? 1 : 0) | (ckpt.stats ? 2 : 0);
        put(os, flags);
        put<uint8_t>(os, 0); // pad
        put(os, ckpt.vocab_hash);
        if (ckpt.schedule) {
            put(os, ckpt.schedule->T);
            put(os, ckpt.schedule->beta_1);
            put(os, ckpt.schedule->beta_T);
        }
        if (ckpt.stats) {
            for (float v : ckpt.stats->x_min) put(os, v);
            for (float v : ckpt.stats->x_max) put(os, v);
        }
        put<uint32_t>(os, (uint32_t)ckpt.tensors.size());
        for (const auto& [name, t] : ckpt.tensors) {
            put_string(os, name);
            put<uint8_t>(os, (uint8_t)t.shape.size());
            for (int64_t d : t.shape) put(os, d);
            os.write(reinterpret_cast<const char*>(t.data.data()),
                     (std::streamsize)(t.numel() * sizeof(float)));
        }
        if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("checkpoint: cannot move " + tmp + " into place");
    }
}

Checkpoint load_checkpoint(const std::string& path, uint64_t expected_vocab_hash) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
    if (get<uint32_t>(is) != kMagic) throw std::runtime_error("checkpoint: bad magic in " + path);
    uint8_t version = get<uint8_t>(is);
    if (version > kVersion)
        throw std::runtime_error("checkpoint: file version " + std::to_string(version) +
                                 " is newer than supported " + std::to_string(kVersion));
    Checkpoint ckpt;
    ckpt.kind = (CheckpointKind)get<uint8_t>(is);
    uint8_t flags = get<uint8_t>(is);
    (void)get<uint8_t>(is);
    ckpt.vocab_hash = get<uint64_t>(is);
    if (expected_vocab_hash != 0 && ckpt.vocab_hash != expected_vocab_hash)
        throw std::runtime_error("checkpoint: condition vocabulary hash mismatch");
    if (flags & 1) {
        ScheduleConfig sc;
        sc.T = get<int32_t>(is);
        sc.beta_1 = get<float>(is);
        sc.beta_T = get<float>(is);
        ckpt.schedule = sc;
    }
    if (flags & 2) {
        ParamStats st;
        for (float& v : st.x_min) v = get<float>(is);
        for (float& v : st.x_max) v = get<float>(is);
        ckpt.stats = st;
    }
    uint32_t count = get<uint32_t>(is);
    for (uint32_t i = 0; i < count; ++i) {
        std::string name = get_string(is);
        uint8_t ndim = get<uint8_t>(is);
        ad::Shape shape(ndim);
        for (auto& d : shape) d = get<int64_t>(is);
        ad::Tensor t(shape);
        is.read(reinterpret_cast<char*>(t.data.data()),
                (std::streamsize)(t.numel() * sizeof(float)));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor data in " + path);
        ckpt.tensors.emplace(std::move(name), std::move(t));
    }
    return ckpt;
}

} // namespace sg::diff

#pragma once

#include "splatgen/ad/params.hpp"
#include "splatgen/diffusion/normalize.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace sg::diff {

enum class CheckpointKind : uint8_t {
    GaussianFit = 1,
    Uplift = 2,
    TextTwin = 3,
    Diffusion = 4,
};

struct ScheduleConfig {
    int32_t T = 1000;
    float beta_1 = 1e-4f;
    float beta_T = 0.02f;
};

/// Versioned binary weight container. Loads refuse files written by a newer
/// format version and, when the caller passes an expected vocabulary hash,
/// files whose conditioning vocabulary differs.
struct Checkpoint {
    CheckpointKind kind = CheckpointKind::GaussianFit;
    uint64_t vocab_hash = 0; // 0 = unconditioned
    std::optional<ScheduleConfig> schedule;
    std::optional<ParamStats> stats;
    std::map<std::string, ad::Tensor> tensors;

    void put_registry(const ad::ParamRegistry<float>& reg);
    /// Copies stored tensors into matching registry entries; throws on missing
    /// names or shape mismatch.
    void load_into(ad::ParamRegistry<float>& reg) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path, uint64_t expected_vocab_hash = 0);

} // namespace sg::diff

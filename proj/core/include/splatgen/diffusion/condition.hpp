#pragma once

#include "splatgen/ad/tensor.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sg::diff {

/// Attribute vocabulary for prompt conditioning, fixed slot order.
struct ConditionVocab {
    std::vector<std::string> race{"white", "black", "asian"};
    std::vector<std::string> gender{"man", "woman"};
    std::vector<std::string> hair{"blonde", "black", "brown", "ginger"};
    std::vector<std::string> top{"long-sleeve t-shirt", "t-shirt", "long-sleeve shirt", "shirt"};
    std::vector<std::string> color{"red", "brown", "black", "pink", "yellow", "blue", "purple"};

    // slot order: race, gender, hair, top, top_color, trouser_color, trainer_color
    std::vector<const std::vector<std::string>*> slots() const {
        return {&race, &gender, &hair, &top, &color, &color, &color};
    }
    int64_t encoding_length() const; // 34
    uint64_t hash() const;           // FNV-1a over all slot entries
};

/// Selected attribute indices, or null (unconditional).
struct Condition {
    bool is_null = true;
    std::array<int32_t, 7> attr{}; // indices into the slots

    static Condition null() { return {}; }
    static Condition from_indices(const std::array<int32_t, 7>& idx, const ConditionVocab& vocab);
    static Condition from_names(const std::array<std::string, 7>& names,
                                const ConditionVocab& vocab);

    /// One-hot concatenation (length 34); zero vector when null.
    ad::Tensor encode(const ConditionVocab& vocab) const;

    bool operator==(const Condition& o) const { return is_null == o.is_null && attr == o.attr; }
};

} // namespace sg::diff

#include "splatgen/diffusion/condition.hpp"

#include <algorithm>
#include <stdexcept>

namespace sg::diff {

int64_t ConditionVocab::encoding_length() const {
    int64_t n = 0;
    for (const auto* s : slots()) n += (int64_t)s->size();
    return n;
}

uint64_t ConditionVocab::hash() const {
    // FNV-1a over every entry, with a separator byte between slots.
    uint64_t h = 1469598103934665603ull;
    auto feed = [&](unsigned char c) {
        h ^= c;
        h *= 1099511628211ull;
    };
    for (const auto* s : slots()) {
        for (const auto& w : *s) {
            for (char c : w) feed((unsigned char)c);
            feed(0x1f);
        }
        feed(0x1e);
    }
    return h;
}

Condition Condition::from_indices(const std::array<int32_t, 7>& idx, const ConditionVocab& vocab) {
    auto slots = vocab.slots();
    for (int i = 0; i < 7; ++i) {
        if (idx[i] < 0 || idx[i] >= (int32_t)slots[i]->size())
            throw std::invalid_argument("condition attribute index out of range for slot " +
                                        std::to_string(i));
    }
    Condition c;
    c.is_null = false;
    c.attr = idx;
    return c;
}

Condition Condition::from_names(const std::array<std::string, 7>& names,
                                const ConditionVocab& vocab) {
    auto slots = vocab.slots();
    std::array<int32_t, 7> idx{};
    for (int i = 0; i < 7; ++i) {
        const auto& s = *slots[i];
        auto it = std::find(s.begin(), s.end(), names[i]);
        if (it == s.end())
            throw std::invalid_argument("unknown attribute '" + names[i] + "' for slot " +
                                        std::to_string(i));
        idx[i] = (int32_t)(it - s.begin());
    }
    return from_indices(idx, vocab);
}

ad::Tensor Condition::encode(const ConditionVocab& vocab) const {
    ad::Tensor out({vocab.encoding_length()});
    if (is_null) return out;
    auto slots = vocab.slots();
    int64_t off = 0;
    for (int i = 0; i < 7; ++i) {
        out.data[off + attr[i]] = 1.0f;
        off += (int64_t)slots[i]->size();
    }
    return out;
}

} // namespace sg::diff

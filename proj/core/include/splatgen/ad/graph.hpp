#pragma once

#include "splatgen/ad/tensor.hpp"

#include <algorithm>
#include <memory>
#include <unordered_set>

namespace sg::ad {

inline bool& grad_mode() {
    thread_local bool enabled = true;
    return enabled;
}

/// RAII guard disabling tape recording (inference / frozen-model evaluation).
struct NoGrad {
    bool prev;
    NoGrad() : prev(grad_mode()) { grad_mode() = false; }
    ~NoGrad() { grad_mode() = prev; }
};

template <class T>
struct NodeT {
    TensorT<T> value;
    TensorT<T> grad; // allocated lazily during backward
    bool requires_grad = false;
    uint64_t id = 0;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backward_fn; // reads this->grad, accumulates into parents

    void accumulate(const TensorT<T>& g) {
        if (grad.numel() == 0) grad = TensorT<T>::zeros(value.shape);
        for (int64_t i = 0; i < g.numel(); ++i) grad.data[i] += g.data[i];
    }
};

inline uint64_t next_node_id() {
    thread_local uint64_t counter = 0;
    return ++counter;
}

/// Handle to a tape node; value semantics, shared graph ownership.
template <class T>
class VarT {
public:
    VarT() = default;
    explicit VarT(std::shared_ptr<NodeT<T>> n) : n_(std::move(n)) {}

    static VarT leaf(TensorT<T> value, bool requires_grad) {
        auto n = std::make_shared<NodeT<T>>();
        n->value = std::move(value);
        n->requires_grad = requires_grad;
        n->id = next_node_id();
        return VarT(std::move(n));
    }
    static VarT constant(TensorT<T> value) { return leaf(std::move(value), false); }

    const TensorT<T>& value() const { return n_->value; }
    const TensorT<T>& grad() const { return n_->grad; }
    const Shape& shape() const { return n_->value.shape; }
    bool requires_grad() const { return n_ && n_->requires_grad; }
    std::shared_ptr<NodeT<T>> node() const { return n_; }
    bool valid() const { return (bool)n_; }

    void zero_grad() {
        if (n_) n_->grad = TensorT<T>();
    }

private:
    std::shared_ptr<NodeT<T>> n_;
};

template <class T>
VarT<T> make_op(TensorT<T> value, std::vector<VarT<T>> parents,
                std::function<void(NodeT<T>&)> backward_fn) {
    auto n = std::make_shared<NodeT<T>>();
    n->value = std::move(value);
    n->id = next_node_id();
    if (grad_mode()) {
        bool any = false;
        for (auto& p : parents) any = any || p.requires_grad();
        if (any) {
            n->requires_grad = true;
            for (auto& p : parents) n->parents.push_back(p.node());
            n->backward_fn = std::move(backward_fn);
        }
    }
    return VarT<T>(std::move(n));
}

/// Reverse sweep from a scalar (or any) root; seeds with ones.
template <class T>
void backward(const VarT<T>& root) {
    auto r = root.node();
    if (!r->requires_grad) return;
    // topo order by DFS, then sort by creation id descending
    std::vector<NodeT<T>*> order;
    std::unordered_set<NodeT<T>*> seen;
    std::vector<NodeT<T>*> stack{r.get()};
    while (!stack.empty()) {
        auto* n = stack.back();
        stack.pop_back();
        if (!seen.insert(n).second) continue;
        order.push_back(n);
        for (auto& p : n->parents)
            if (p->requires_grad) stack.push_back(p.get());
    }
    std::sort(order.begin(), order.end(),
              [](const NodeT<T>* a, const NodeT<T>* b) { return a->id > b->id; });
    r->grad = TensorT<T>::full(r->value.shape, T(1));
    for (auto* n : order) {
        if (n->backward_fn && n->grad.numel() > 0) n->backward_fn(*n);
    }
}

} // namespace sg::ad

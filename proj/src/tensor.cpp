// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#include "ccsbesr/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <unordered_set>

namespace ccsbesr {

int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) {
        if (d <= 0) throw std::invalid_argument("shape: nonpositive extent in " + shape_str(s));
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& s) {
    std::string out = "[";
    for (size_t i = 0; i < s.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(s[i]);
    }
    return out + "]";
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool on) { g_grad_enabled = on; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

namespace detail {

int64_t next_seq() {
    static std::atomic<int64_t> counter{0};
    return counter.fetch_add(1, std::memory_order_relaxed);
}

}  // namespace detail

template <typename T>
void backward(const Tensor<T>& loss) {
    if (loss.numel() != 1) throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(loss.shape()));
    auto root = loss.slot();
    if (!root || !root->creator) throw std::runtime_error("backward: loss tensor is not on the gradient tape");

    // Collect the reachable subgraph. Slots are retained so the raw
    // Node::out pointers stay valid for the duration of the walk.
    std::vector<std::shared_ptr<detail::Node<T>>> nodes;
    std::vector<std::shared_ptr<detail::GradSlot<T>>> retained;
    std::unordered_set<detail::Node<T>*> seen;
    std::vector<std::shared_ptr<detail::Node<T>>> stack{root->creator};
    retained.push_back(root);
    seen.insert(root->creator.get());
    while (!stack.empty()) {
        auto node = stack.back();
        stack.pop_back();
        nodes.push_back(node);
        for (const auto& in : node->inputs) {
            retained.push_back(in);
            if (in->creator && seen.insert(in->creator.get()).second) stack.push_back(in->creator);
        }
    }

    // Node sequence numbers are a topological order of construction, so
    // descending order is a valid reverse sweep.
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a->seq > b->seq; });

    // Interior adjoints restart at zero each call; leaf adjoints persist
    // so repeated calls accumulate.
    for (const auto& node : nodes) node->out->reset();
    root->ensure();
    root->grad[0] = T(1);
    for (const auto& node : nodes) node->backprop();
}

template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);

template class Tensor<float>;
template class Tensor<double>;

}  // namespace ccsbesr

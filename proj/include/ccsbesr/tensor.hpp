// Copyright 2026 ccsbesr contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef CCSBESR_TENSOR_HPP
#define CCSBESR_TENSOR_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccsbesr {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Thread-local autograd recording switch. Off means ops run without
// building nodes; used for validation/inference passes.
bool grad_enabled();
void set_grad_enabled(bool on);

struct NoGradGuard {
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

namespace detail {

template <typename T>
struct Node;

// Gradient slot shared between a tensor and every node that reads or
// writes its adjoint. A slot with a null creator is a leaf.
template <typename T>
struct GradSlot {
    std::vector<T> grad;  // sized lazily; empty means "never touched"
    int64_t numel = 0;
    std::shared_ptr<Node<T>> creator;

    T* ensure() {
        if (static_cast<int64_t>(grad.size()) != numel) grad.assign(static_cast<size_t>(numel), T(0));
        return grad.data();
    }
    void reset() { grad.assign(static_cast<size_t>(numel), T(0)); }
};

// One executed operation. `inputs` own the upstream graph; the output
// slot owns this node, so ownership only ever points backwards.
template <typename T>
struct Node {
    int64_t seq = 0;
    GradSlot<T>* out = nullptr;  // non-owning; kept alive by the walk
    std::vector<std::shared_ptr<GradSlot<T>>> inputs;
    std::function<void()> backprop;
};

int64_t next_seq();

}  // namespace detail

// Dense row-major N-d array. Copies share the underlying buffer; all
// operations in ops.hpp allocate fresh outputs and never mutate inputs.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape)
        : shape_(std::move(shape)),
          data_(std::make_shared<std::vector<T>>(static_cast<size_t>(shape_numel(shape_)), T(0))) {}

    Tensor(Shape shape, std::vector<T> values) : shape_(std::move(shape)) {
        if (static_cast<int64_t>(values.size()) != shape_numel(shape_))
            throw std::invalid_argument("tensor: data length " + std::to_string(values.size()) +
                                        " does not match shape " + shape_str(shape_));
        data_ = std::make_shared<std::vector<T>>(std::move(values));
    }

    static Tensor full(Shape shape, T value) {
        Tensor t(std::move(shape));
        for (auto& v : *t.data_) v = value;
        return t;
    }

    static Tensor scalar(T value) { return Tensor({1}, {value}); }

    bool defined() const { return static_cast<bool>(data_); }
    const Shape& shape() const { return shape_; }
    int ndim() const { return static_cast<int>(shape_.size()); }
    int64_t dim(int i) const { return shape_[static_cast<size_t>(i)]; }
    int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

    T* data() { return data_->data(); }
    const T* data() const { return data_->data(); }
    T& at(int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
    T at(int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }
    T item() const {
        if (numel() != 1) throw std::invalid_argument("item: tensor has " + std::to_string(numel()) + " elements");
        return (*data_)[0];
    }
    std::shared_ptr<std::vector<T>> storage() const { return data_; }

    // --- autograd ---

    bool tracked() const { return static_cast<bool>(slot_); }
    bool requires_grad() const { return slot_ && !slot_->creator; }

    Tensor& set_requires_grad(bool on) {
        if (on) {
            if (slot_ && slot_->creator)
                throw std::logic_error("set_requires_grad: tensor is already an op output");
            if (!slot_) {
                slot_ = std::make_shared<detail::GradSlot<T>>();
                slot_->numel = numel();
            }
        } else {
            if (slot_ && slot_->creator)
                throw std::logic_error("set_requires_grad: cannot untrack an op output");
            slot_.reset();
        }
        return *this;
    }

    bool has_grad() const { return slot_ && !slot_->grad.empty(); }

    // Copy of the accumulated gradient; zeros if backward never reached it.
    Tensor grad() const {
        if (!slot_) throw std::logic_error("grad: tensor is not tracked");
        Tensor g(shape_);
        if (!slot_->grad.empty()) *g.data_ = slot_->grad;
        return g;
    }

    void zero_grad() {
        if (slot_) slot_->grad.clear();
    }

    Tensor detached() const {
        Tensor t;
        t.shape_ = shape_;
        t.data_ = data_;
        return t;
    }

    // Shares storage under a new shape. Only for untracked tensors so the
    // tape never sees two shapes for one buffer.
    Tensor reshaped(Shape shape) const {
        if (slot_) throw std::logic_error("reshaped: tensor is tracked");
        if (shape_numel(shape) != numel())
            throw std::invalid_argument("reshaped: " + shape_str(shape) + " has wrong element count");
        Tensor t;
        t.shape_ = std::move(shape);
        t.data_ = data_;
        return t;
    }

    std::shared_ptr<detail::GradSlot<T>> slot() const { return slot_; }

    std::shared_ptr<detail::GradSlot<T>> ensure_slot() {
        if (!slot_) {
            slot_ = std::make_shared<detail::GradSlot<T>>();
            slot_->numel = numel();
        }
        return slot_;
    }

private:
    Shape shape_;
    std::shared_ptr<std::vector<T>> data_;
    std::shared_ptr<detail::GradSlot<T>> slot_;
};

namespace detail {

// Attach a node to `out` recording `backprop` against the tracked inputs.
// No-op when grad mode is off or nothing upstream is tracked.
template <typename T>
void make_node(Tensor<T>& out, std::initializer_list<const Tensor<T>*> inputs, std::function<void()> backprop) {
    if (!grad_enabled()) return;
    std::vector<std::shared_ptr<GradSlot<T>>> tracked;
    for (const Tensor<T>* t : inputs)
        if (t->tracked()) tracked.push_back(t->slot());
    if (tracked.empty()) return;
    auto node = std::make_shared<Node<T>>();
    node->seq = next_seq();
    node->inputs = std::move(tracked);
    auto slot = out.ensure_slot();
    node->out = slot.get();
    node->backprop = std::move(backprop);
    slot->creator = node;
}

}  // namespace detail

// Reverse accumulation from a scalar loss. Leaf gradients accumulate
// across calls; the trainer resets them between steps.
template <typename T>
void backward(const Tensor<T>& loss);

extern template void backward<float>(const Tensor<float>&);
extern template void backward<double>(const Tensor<double>&);

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace ccsbesr

#endif

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "esfp/tensor.hpp"

namespace esfp::ad {

// Define-by-run reverse-mode autodiff over Tensor. Forward values are computed
// eagerly at graph construction; backward() walks the recorded tape.
struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // materialized lazily by backward()
    bool requires_grad = false;
    std::vector<NodePtr> inputs;
    std::function<void(Node&)> backward_fn;  // null for leaves/constants
    const char* op = "leaf";
};

// Lightweight handle to a graph node.
class Value {
public:
    Value() = default;
    explicit Value(NodePtr n) : node_(std::move(n)) {}

    static Value constant(Tensor t);
    static Value constant(double v) { return constant(Tensor::scalar(v)); }
    static Value leaf(Tensor t);  // trainable leaf

    const Tensor& val() const { return node_->value; }
    const Tensor& grad() const { return node_->grad; }
    const NodePtr& node() const { return node_; }
    bool defined() const { return node_ != nullptr; }

private:
    NodePtr node_;
};

// ---- primitives -------------------------------------------------------

Value add(const Value& a, const Value& b);
Value sub(const Value& a, const Value& b);
Value mul(const Value& a, const Value& b);
Value div(const Value& a, const Value& b);
Value neg(const Value& a);

inline Value operator+(const Value& a, const Value& b) { return add(a, b); }
inline Value operator-(const Value& a, const Value& b) { return sub(a, b); }
inline Value operator*(const Value& a, const Value& b) { return mul(a, b); }
inline Value operator/(const Value& a, const Value& b) { return div(a, b); }
inline Value operator-(const Value& a) { return neg(a); }

Value scale(const Value& a, double s);
Value add_const(const Value& a, double c);

// a: [..., m, k], b: [..., k, n]; equal leading dims or either operand rank 2.
Value matmul(const Value& a, const Value& b);

Value reshape(const Value& a, std::vector<std::size_t> shape);
Value transpose(const Value& a, std::vector<std::size_t> perm);
Value concat(const std::vector<Value>& parts, std::size_t axis);
Value slice(const Value& a, std::size_t axis, std::size_t start, std::size_t len);

Value sum(const Value& a, std::vector<std::size_t> axes, bool keepdims);
Value mean(const Value& a, std::vector<std::size_t> axes, bool keepdims);
Value sum_all(const Value& a);
Value mean_all(const Value& a);

Value exp_(const Value& a);
Value log_(const Value& a);
Value sqrt_(const Value& a);
Value abs_(const Value& a);             // subgradient 0 at 0
Value maximum_const(const Value& a, double c);
Value relu(const Value& a);
Value gelu(const Value& a);             // exact erf form
Value softplus(const Value& a);
Value softmax_last(const Value& a);
Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps = 1e-5);

// ---- engine ------------------------------------------------------------

// Returns the (eagerly computed) forward value of the root.
const Tensor& evaluate(const Value& root);

// Reverse pass from a scalar root. Zeroes gradients of every node reachable
// from the root, then accumulates. Throws if the root is not scalar.
void backward(const Value& root);

// Central-difference gradient check. `builder` must rebuild the scalar loss
// from the current values stored in `params` (the same leaf nodes are reused
// across rebuilds). Returns max over all parameter coordinates of
// |analytic - numeric| / max(1, |numeric|).
double check_gradients(const std::function<Value()>& builder,
                       const std::vector<NodePtr>& params, double h = 1e-5);

}  // namespace esfp::ad

#include "esfp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

namespace esfp::ad {

namespace {

NodePtr make_node(const char* op, Tensor value, std::vector<NodePtr> inputs,
                  std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->value = std::move(value);
    n->inputs = std::move(inputs);
    for (const auto& in : n->inputs) {
        if (in->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return n;
}

void accumulate(Node& target, const Tensor& g) {
    if (target.grad.size() != target.value.size()) target.grad = Tensor(target.value.shape());
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) target.grad[i] += g[i];
}

// Sum `t` down to `target` (may have lower rank; right-aligned broadcast semantics).
Tensor reduce_grad(const Tensor& t, const std::vector<std::size_t>& target) {
    Tensor cur = t;
    while (cur.rank() > target.size()) {
        // sum over leading axis
        const auto& s = cur.shape();
        std::vector<std::size_t> rest(s.begin() + 1, s.end());
        Tensor out(rest);
        const std::size_t inner = shape_numel(rest);
        for (std::size_t i = 0; i < s[0]; ++i)
            for (std::size_t j = 0; j < inner; ++j) out[j] += cur[i * inner + j];
        cur = std::move(out);
    }
    if (cur.shape() != target) cur = reduce_to_shape(cur, target);
    return cur;
}

double op_add(double a, double b) { return a + b; }
double op_sub(double a, double b) { return a - b; }
double op_mul(double a, double b) { return a * b; }
double op_div(double a, double b) { return a / b; }

Tensor permute_eager(const Tensor& t, const std::vector<std::size_t>& perm) {
    const std::size_t r = t.rank();
    if (perm.size() != r) throw std::invalid_argument("transpose: perm rank mismatch");
    std::vector<std::size_t> oshape(r);
    for (std::size_t i = 0; i < r; ++i) oshape[i] = t.shape()[perm[i]];
    Tensor out(oshape);
    std::vector<std::size_t> istrides(r, 1);
    for (std::size_t i = r - 1; i-- > 0;) istrides[i] = istrides[i + 1] * t.shape()[i + 1];
    std::vector<std::size_t> idx(r, 0);
    const std::size_t n = t.size();
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t src = 0;
        for (std::size_t k = 0; k < r; ++k) src += idx[k] * istrides[perm[k]];
        out[flat] = t[src];
        for (std::size_t k = r; k-- > 0;) {
            if (++idx[k] < oshape[k]) break;
            idx[k] = 0;
        }
    }
    return out;
}

Tensor expand_to(const Tensor& g, const std::vector<std::size_t>& shape) {
    return broadcast_binary(g, Tensor::zeros(shape), op_add);
}

std::vector<std::size_t> keepdims_shape(const std::vector<std::size_t>& shape,
                                        const std::vector<std::size_t>& axes) {
    auto out = shape;
    for (std::size_t a : axes) out[a] = 1;
    return out;
}

Tensor reduce_sum_axes(const Tensor& t, const std::vector<std::size_t>& axes) {
    return reduce_to_shape(t, keepdims_shape(t.shape(), axes));
}

}  // namespace

Value Value::constant(Tensor t) {
    auto n = std::make_shared<Node>();
    n->op = "const";
    n->value = std::move(t);
    return Value(n);
}

Value Value::leaf(Tensor t) {
    auto n = std::make_shared<Node>();
    n->op = "leaf";
    n->value = std::move(t);
    n->requires_grad = true;
    return Value(n);
}

// ---- elementwise binary --------------------------------------------------

namespace {

Value binary_op(const char* name, const Value& a, const Value& b, double (*fwd)(double, double),
                std::function<void(Node&)> bwd) {
    Tensor v;
    try {
        v = broadcast_binary(a.val(), b.val(), fwd);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string(name) + ": " + e.what());
    }
    return Value(make_node(name, std::move(v), {a.node(), b.node()}, std::move(bwd)));
}

}  // namespace

Value add(const Value& a, const Value& b) {
    auto an = a.node(), bn = b.node();
    return binary_op("add", a, b, op_add, [an, bn](Node& self) {
        if (an->requires_grad) accumulate(*an, reduce_grad(self.grad, an->value.shape()));
        if (bn->requires_grad) accumulate(*bn, reduce_grad(self.grad, bn->value.shape()));
    });
}

Value sub(const Value& a, const Value& b) {
    auto an = a.node(), bn = b.node();
    return binary_op("subtract", a, b, op_sub, [an, bn](Node& self) {
        if (an->requires_grad) accumulate(*an, reduce_grad(self.grad, an->value.shape()));
        if (bn->requires_grad) {
            Tensor g = self.grad;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i];
            accumulate(*bn, reduce_grad(g, bn->value.shape()));
        }
    });
}

Value mul(const Value& a, const Value& b) {
    auto an = a.node(), bn = b.node();
    return binary_op("multiply", a, b, op_mul, [an, bn](Node& self) {
        if (an->requires_grad)
            accumulate(*an, reduce_grad(broadcast_binary(self.grad, bn->value, op_mul),
                                        an->value.shape()));
        if (bn->requires_grad)
            accumulate(*bn, reduce_grad(broadcast_binary(self.grad, an->value, op_mul),
                                        bn->value.shape()));
    });
}

Value div(const Value& a, const Value& b) {
    auto an = a.node(), bn = b.node();
    return binary_op("divide", a, b, op_div, [an, bn](Node& self) {
        if (an->requires_grad)
            accumulate(*an, reduce_grad(broadcast_binary(self.grad, bn->value, op_div),
                                        an->value.shape()));
        if (bn->requires_grad) {
            // d/db (a/b) = -a / b^2
            Tensor gb = broadcast_binary(broadcast_binary(self.grad, an->value, op_mul), bn->value,
                                         [](double x, double y) { return -x / (y * y); });
            accumulate(*bn, reduce_grad(gb, bn->value.shape()));
        }
    });
}

Value neg(const Value& a) {
    auto an = a.node();
    Tensor v = a.val();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = -v[i];
    return Value(make_node("negate", std::move(v), {an}, [an](Node& self) {
        Tensor g = self.grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = -g[i];
        accumulate(*an, g);
    }));
}

Value scale(const Value& a, double s) {
    auto an = a.node();
    Tensor v = a.val();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= s;
    return Value(make_node("scale", std::move(v), {an}, [an, s](Node& self) {
        Tensor g = self.grad;
        for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
        accumulate(*an, g);
    }));
}

Value add_const(const Value& a, double c) {
    auto an = a.node();
    Tensor v = a.val();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += c;
    return Value(make_node("add_const", std::move(v), {an},
                           [an](Node& self) { accumulate(*an, self.grad); }));
}

// ---- matmul ----------------------------------------------------------------

Value matmul(const Value& a, const Value& b) {
    auto an = a.node(), bn = b.node();
    Tensor v;
    try {
        v = matmul_eager(a.val(), b.val());
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("matmul: ") + e.what());
    }
    return Value(make_node("matmul", std::move(v), {an, bn}, [an, bn](Node& self) {
        if (an->requires_grad) {
            Tensor ga = matmul_eager(self.grad, transpose_last_two(bn->value));
            accumulate(*an, reduce_grad(ga, an->value.shape()));
        }
        if (bn->requires_grad) {
            Tensor gb = matmul_eager(transpose_last_two(an->value), self.grad);
            accumulate(*bn, reduce_grad(gb, bn->value.shape()));
        }
    }));
}

// ---- shape ops ---------------------------------------------------------------

Value reshape(const Value& a, std::vector<std::size_t> shape) {
    if (shape_numel(shape) != a.val().size())
        throw std::invalid_argument("reshape: element count mismatch " + a.val().shape_str() +
                                    " -> " + shape_to_string(shape));
    auto an = a.node();
    Tensor v(shape, a.val().storage());
    auto in_shape = a.val().shape();
    return Value(make_node("reshape", std::move(v), {an}, [an, in_shape](Node& self) {
        accumulate(*an, Tensor(in_shape, self.grad.storage()));
    }));
}

Value transpose(const Value& a, std::vector<std::size_t> perm) {
    auto an = a.node();
    Tensor v = permute_eager(a.val(), perm);
    std::vector<std::size_t> inv(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
    return Value(make_node("transpose", std::move(v), {an}, [an, inv](Node& self) {
        accumulate(*an, permute_eager(self.grad, inv));
    }));
}

Value concat(const std::vector<Value>& parts, std::size_t axis) {
    if (parts.empty()) throw std::invalid_argument("concatenate: no inputs");
    const auto& first = parts.front().val().shape();
    const std::size_t r = first.size();
    if (axis >= r) throw std::invalid_argument("concatenate: axis out of range");
    std::vector<std::size_t> oshape = first;
    std::size_t total = first[axis];
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto& s = parts[i].val().shape();
        if (s.size() != r) throw std::invalid_argument("concatenate: rank mismatch");
        for (std::size_t k = 0; k < r; ++k)
            if (k != axis && s[k] != first[k])
                throw std::invalid_argument("concatenate: shape mismatch");
        total += s[axis];
    }
    oshape[axis] = total;
    Tensor v(oshape);
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < axis; ++k) outer *= first[k];
    for (std::size_t k = axis + 1; k < r; ++k) inner *= first[k];
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const Tensor& t = p.val();
        const std::size_t len = t.shape()[axis];
        for (std::size_t o = 0; o < outer; ++o) {
            const double* src = t.data() + o * len * inner;
            double* dst = v.data() + (o * total + off) * inner;
            std::copy(src, src + len * inner, dst);
        }
        off += len;
    }
    std::vector<NodePtr> ins;
    for (const auto& p : parts) ins.push_back(p.node());
    return Value(make_node("concatenate", std::move(v), ins,
                           [ins, offsets, outer, inner, total, axis](Node& self) {
                               for (std::size_t i = 0; i < ins.size(); ++i) {
                                   auto& in = *ins[i];
                                   if (!in.requires_grad) continue;
                                   const std::size_t len = in.value.shape()[axis];
                                   Tensor g(in.value.shape());
                                   for (std::size_t o = 0; o < outer; ++o) {
                                       const double* src =
                                           self.grad.data() + (o * total + offsets[i]) * inner;
                                       double* dst = g.data() + o * len * inner;
                                       std::copy(src, src + len * inner, dst);
                                   }
                                   accumulate(in, g);
                               }
                           }));
}

Value slice(const Value& a, std::size_t axis, std::size_t start, std::size_t len) {
    const auto& shape = a.val().shape();
    if (axis >= shape.size()) throw std::invalid_argument("slice: axis out of range");
    if (start + len > shape[axis]) throw std::invalid_argument("slice: range out of bounds");
    auto an = a.node();
    std::size_t outer = 1, inner = 1;
    for (std::size_t k = 0; k < axis; ++k) outer *= shape[k];
    for (std::size_t k = axis + 1; k < shape.size(); ++k) inner *= shape[k];
    const std::size_t dim = shape[axis];
    auto oshape = shape;
    oshape[axis] = len;
    Tensor v(oshape);
    for (std::size_t o = 0; o < outer; ++o) {
        const double* src = a.val().data() + (o * dim + start) * inner;
        std::copy(src, src + len * inner, v.data() + o * len * inner);
    }
    return Value(make_node("slice", std::move(v), {an},
                           [an, outer, inner, dim, start, len](Node& self) {
                               Tensor g(an->value.shape());
                               for (std::size_t o = 0; o < outer; ++o) {
                                   const double* src = self.grad.data() + o * len * inner;
                                   double* dst = g.data() + (o * dim + start) * inner;
                                   std::copy(src, src + len * inner, dst);
                               }
                               accumulate(*an, g);
                           }));
}

// ---- reductions -------------------------------------------------------------

Value sum(const Value& a, std::vector<std::size_t> axes, bool keepdims) {
    const auto& shape = a.val().shape();
    for (std::size_t ax : axes)
        if (ax >= shape.size()) throw std::invalid_argument("sum: axis out of range");
    auto an = a.node();
    Tensor kept = reduce_sum_axes(a.val(), axes);
    auto kshape = kept.shape();
    Tensor v = kept;
    if (!keepdims) {
        std::vector<std::size_t> squeezed;
        for (std::size_t k = 0; k < shape.size(); ++k)
            if (std::find(axes.begin(), axes.end(), k) == axes.end())
                squeezed.push_back(shape[k]);
        v = Tensor(squeezed, kept.storage());
    }
    return Value(make_node("sum", std::move(v), {an}, [an, kshape](Node& self) {
        Tensor g(kshape, self.grad.storage());
        accumulate(*an, expand_to(g, an->value.shape()));
    }));
}

Value mean(const Value& a, std::vector<std::size_t> axes, bool keepdims) {
    std::size_t count = 1;
    for (std::size_t ax : axes) count *= a.val().shape()[ax];
    return scale(sum(a, std::move(axes), keepdims), 1.0 / static_cast<double>(count));
}

Value sum_all(const Value& a) {
    auto an = a.node();
    double s = 0;
    for (std::size_t i = 0; i < a.val().size(); ++i) s += a.val()[i];
    return Value(make_node("sum", Tensor::scalar(s), {an}, [an](Node& self) {
        accumulate(*an, Tensor::full(an->value.shape(), self.grad[0]));
    }));
}

Value mean_all(const Value& a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.val().size()));
}

// ---- elementwise unary ------------------------------------------------------

namespace {

Value unary_op(const char* name, const Value& a, double (*fwd)(double),
               double (*dfdx)(double /*x*/, double /*y*/)) {
    auto an = a.node();
    Tensor v = a.val();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fwd(v[i]);
    return Value(make_node(name, std::move(v), {an}, [an, dfdx](Node& self) {
        Tensor g(an->value.shape());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = self.grad[i] * dfdx(an->value[i], self.value[i]);
        accumulate(*an, g);
    }));
}

}  // namespace

Value exp_(const Value& a) {
    return unary_op("exponential", a, [](double x) { return std::exp(x); },
                    [](double, double y) { return y; });
}

Value log_(const Value& a) {
    return unary_op("log", a, [](double x) { return std::log(x); },
                    [](double x, double) { return 1.0 / x; });
}

Value sqrt_(const Value& a) {
    return unary_op("sqrt", a, [](double x) { return std::sqrt(x); },
                    [](double, double y) { return 0.5 / y; });
}

Value abs_(const Value& a) {
    return unary_op("abs", a, [](double x) { return std::fabs(x); },
                    [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Value maximum_const(const Value& a, double c) {
    auto an = a.node();
    Tensor v = a.val();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::max(v[i], c);
    return Value(make_node("maximum_const", std::move(v), {an}, [an, c](Node& self) {
        Tensor g(an->value.shape());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = an->value[i] > c ? self.grad[i] : 0.0;
        accumulate(*an, g);
    }));
}

Value relu(const Value& a) { return maximum_const(a, 0.0); }

Value gelu(const Value& a) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    constexpr double inv_sqrt2pi = 0.3989422804014326779;
    return unary_op(
        "gelu", a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); },
        [](double x, double) {
            const double cdf = 0.5 * (1.0 + std::erf(x * inv_sqrt2));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
            return cdf + x * pdf;
        });
}

Value softplus(const Value& a) {
    return unary_op(
        "softplus", a,
        [](double x) {
            if (x > 30.0) return x;
            if (x < -30.0) return std::exp(x);
            return std::log1p(std::exp(x));
        },
        [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Value softmax_last(const Value& a) {
    const auto& shape = a.val().shape();
    if (shape.empty()) throw std::invalid_argument("softmax: scalar input");
    auto an = a.node();
    const std::size_t d = shape.back();
    const std::size_t rows = a.val().size() / d;
    Tensor v(shape);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.val().data() + r * d;
        double* y = v.data() + r * d;
        double m = x[0];
        for (std::size_t i = 1; i < d; ++i) m = std::max(m, x[i]);
        double s = 0;
        for (std::size_t i = 0; i < d; ++i) {
            y[i] = std::exp(x[i] - m);
            s += y[i];
        }
        for (std::size_t i = 0; i < d; ++i) y[i] /= s;
    }
    return Value(make_node("softmax", std::move(v), {an}, [an, rows, d](Node& self) {
        Tensor g(an->value.shape());
        for (std::size_t r = 0; r < rows; ++r) {
            const double* y = self.value.data() + r * d;
            const double* go = self.grad.data() + r * d;
            double dot = 0;
            for (std::size_t i = 0; i < d; ++i) dot += y[i] * go[i];
            double* gi = g.data() + r * d;
            for (std::size_t i = 0; i < d; ++i) gi[i] = y[i] * (go[i] - dot);
        }
        accumulate(*an, g);
    }));
}

Value layer_norm(const Value& x, const Value& gain, const Value& bias, double eps) {
    const auto& shape = x.val().shape();
    if (shape.empty()) throw std::invalid_argument("layer_norm: scalar input");
    std::vector<std::size_t> last = {shape.size() - 1};
    Value mu = mean(x, last, true);
    Value xc = sub(x, mu);
    Value var = mean(mul(xc, xc), last, true);
    Value norm = div(xc, sqrt_(add_const(var, eps)));
    return add(mul(norm, gain), bias);
}

// ---- engine ------------------------------------------------------------------

const Tensor& evaluate(const Value& root) { return root.val(); }

namespace {

std::vector<Node*> topo_order(Node* root) {
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    // iterative post-order DFS
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(root, 0);
    visited.insert(root);
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next].get();
            ++next;
            if (child->requires_grad && !visited.count(child)) {
                visited.insert(child);
                stack.emplace_back(child, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    return order;  // children before parents
}

}  // namespace

void backward(const Value& root) {
    if (root.val().size() != 1)
        throw std::invalid_argument("backward: root must be scalar, got shape " +
                                    root.val().shape_str());
    Node* r = root.node().get();
    if (!r->requires_grad) return;
    auto order = topo_order(r);
    for (Node* n : order) n->grad = Tensor(n->value.shape());
    r->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn) n->backward_fn(*n);
    }
}

double check_gradients(const std::function<Value()>& builder, const std::vector<NodePtr>& params,
                       double h) {
    Value root = builder();
    if (!std::isfinite(root.val().item()))
        throw std::runtime_error("check_gradients: non-finite loss");
    backward(root);
    std::vector<Tensor> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) {
        analytic.push_back(p->grad.size() == p->value.size() ? p->grad
                                                             : Tensor(p->value.shape()));
    }
    double max_err = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Node& p = *params[pi];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double orig = p.value[i];
            p.value[i] = orig + h;
            const double fp = builder().val().item();
            p.value[i] = orig - h;
            const double fm = builder().val().item();
            p.value[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("check_gradients: non-finite loss while probing");
            const double numeric = (fp - fm) / (2.0 * h);
            const double err =
                std::fabs(analytic[pi][i] - numeric) / std::max(1.0, std::fabs(numeric));
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace esfp::ad

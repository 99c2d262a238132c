#pragma once

// Dense float64 tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Every op that touches a
// tensor with requires_grad() records its parents and a backward closure;
// Tensor::backward() walks that graph once in reverse topological order.
// Graphs are rebuilt on every forward pass and belong to a single thread.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace devae {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node;
using NodePtr = std::shared_ptr<Node>;

// Receives the output gradient and one buffer per parent (nullptr when the
// parent does not need a gradient). Implementations must accumulate (+=).
using BackwardFn = std::function<void(const Node& self, std::span<const double> grad_out,
                                      std::span<std::vector<double>*> parent_grads)>;

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until the first backward pass reaches it
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    BackwardFn backward_fn;
};

}  // namespace detail

class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    // Rows must all have the same length.
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows,
                         bool requires_grad = false);
    static Tensor vector(std::initializer_list<double> values, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }

    const Shape& shape() const;
    std::size_t rank() const { return shape().size(); }
    std::size_t numel() const { return values().size(); }
    // Row/column count for rank-2 tensors; a rank-1 tensor reads as one row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<const double> values() const;
    // Direct write access, for optimizers and checkpoint loading. Never use
    // on a tensor whose graph is still awaiting backward().
    std::span<double> mutable_values();
    double item() const;
    double at(std::size_t r, std::size_t c) const;

    bool requires_grad() const;
    bool has_grad() const;
    std::span<const double> grad() const;
    void zero_grad();

    // Accumulates d(this)/d(leaf) into every reachable leaf that requires a
    // gradient. Throws ContractError unless numel() == 1.
    void backward() const;

    // Same values, cut from the graph.
    Tensor detach() const;

    const detail::NodePtr& node() const { return node_; }
    static Tensor from_node(detail::NodePtr node);

private:
    detail::NodePtr node_;
};

// Disables graph recording on the current thread for its lifetime.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

// --- ops -------------------------------------------------------------------
// Binary elementwise ops broadcast rank<=2 operands: a dimension of size 1
// stretches to match the other operand, and a one-element tensor broadcasts
// everywhere. Rank-1 tensors behave as a single row.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
Tensor neg(const Tensor& a);

// [m,k] x [k,n] -> [m,n]
Tensor matmul(const Tensor& a, const Tensor& b);
// [m,k] x [n,k]^T -> [m,n]
Tensor matmul_bt(const Tensor& a, const Tensor& b);

Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor square(const Tensor& a);
// Gradient passes where lo <= a <= hi and is zero outside.
Tensor clamp(const Tensor& a, double lo, double hi);

// Full reductions to a one-element tensor of shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// [m,n] -> [m,1]
Tensor row_sum(const Tensor& a);

// [m,n] -> [m,1]
Tensor column(const Tensor& a, std::size_t j);
// Concatenate rank-2 tensors with equal row counts along columns.
Tensor concat_cols(std::span<const Tensor> parts);

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
inline Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
inline Tensor operator-(const Tensor& a) { return neg(a); }
inline Tensor operator*(const Tensor& a, double s) { return scale(a, s); }
inline Tensor operator*(double s, const Tensor& a) { return scale(a, s); }
inline Tensor operator+(const Tensor& a, double s) { return add_scalar(a, s); }
inline Tensor operator+(double s, const Tensor& a) { return add_scalar(a, s); }
inline Tensor operator-(const Tensor& a, double s) { return add_scalar(a, -s); }

}  // namespace devae

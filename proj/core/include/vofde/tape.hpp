#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vofde/tensor.hpp"

namespace vofde::ad {

// Named parameter tensors, iterated in name order.
class ParamStore {
public:
    using Map = std::map<std::string, Tensor>;

    void set(const std::string& name, Tensor value);
    bool contains(const std::string& name) const;
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;

    std::size_t tensor_count() const noexcept { return entries_.size(); }
    std::size_t scalar_count() const noexcept;
    bool empty() const noexcept { return entries_.empty(); }

    Map::iterator begin() noexcept { return entries_.begin(); }
    Map::iterator end() noexcept { return entries_.end(); }
    Map::const_iterator begin() const noexcept { return entries_.begin(); }
    Map::const_iterator end() const noexcept { return entries_.end(); }

    friend bool operator==(const ParamStore&, const ParamStore&) = default;

private:
    Map entries_;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape& tape() const { return *tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

    const Tensor& value() const;
    const std::vector<std::size_t>& shape() const { return value().shape(); }
    std::size_t size() const { return value().size(); }
    double item() const { return value().item(); }

private:
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

// Reverse-mode record. Nodes are appended in evaluation order; backward()
// walks them once in reverse. Nodes that depend on no parameter carry no
// adjoint rule.
class Tape {
public:
    // Adjoint rule: receives the gradient of the node's output and pushes
    // contributions into its inputs via accumulate().
    using Backward = std::function<void(Tape&, const Tensor& out_grad)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var constant(double value) { return constant(Tensor::scalar(value)); }

    // Leaf bound to store[name]. Repeated calls return the same leaf.
    Var param(const ParamStore& store, const std::string& name);

    // General node. backward may be empty for non-differentiable outputs.
    Var record(Tensor value, std::span<const Var> inputs, Backward backward);

    const Tensor& value(Var v) const { return nodes_[v.id()].value; }
    bool requires_grad(Var v) const { return nodes_[v.id()].requires_grad; }

    // Adds g into the gradient buffer of v (no-op for constants).
    void accumulate(Var v, const Tensor& g);
    void accumulate(Var v, std::size_t index, double g);

    // Seeds d(loss)/d(loss) = 1 and runs every adjoint rule once, in reverse.
    void backward(Var loss);

    // Gradient of the last backward() target with respect to v; zeros if v
    // was not reached.
    Tensor grad(Var v) const;

    // Gradients for every entry of store, zeros for entries not on the tape.
    ParamStore gradients(const ParamStore& store) const;

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::map<std::pair<const ParamStore*, std::string>, std::size_t> param_ids_;
};

// ---- primitives -----------------------------------------------------------
//
// Elementwise binary ops accept equal shapes, or a size-1 operand that is
// broadcast against the other side.

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var add_scalar(Var a, double c);
Var scalar_mul(Var a, double c);
Var neg(Var a);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator-(Var a);

// [m,k] x [k,n]
Var matmul(Var a, Var b);
Var transpose(Var a);
// [r,c] + bias of size c, broadcast over rows
Var add_row(Var a, Var bias);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var reciprocal(Var a);

Var sum(Var a);
Var mean(Var a);
// [r,c] -> [c], mean over rows
Var mean_rows(Var a);

// softmax over each row of a rank-2 tensor
Var row_softmax(Var a);
// softmax restricted to entries where mask != 0; other entries are 0.
// Every row of the mask must have at least one nonzero entry.
Var masked_row_softmax(Var a, const Tensor& mask);

// Flattened concatenation -> rank 1
Var concat(std::span<const Var> parts);
Var slice(Var a, std::size_t offset, std::size_t length);
Var reshape(Var a, std::vector<std::size_t> shape);

// base^e elementwise for a constant positive base tensor and a size-1
// variable exponent. Zero bases give 0 with zero adjoint (0^e := 0).
Var pow_const_base(const Tensor& base, Var exponent);
Var pow_const_base(double base, Var exponent);
// x^p elementwise for a strictly positive variable base and constant p.
Var pow_var_base(Var base, double exponent);
// Gamma(x) elementwise; adjoint Gamma(x) psi(x). Requires x > 0.
Var gamma_of(Var a);

// sum_j coeffs[j] * terms[j]; terms share one shape, coeffs is rank 1.
Var lincomb(Var coeffs, std::span<const Var> terms);

// Mean softmax cross-entropy over the rows where mask is true.
Var softmax_cross_entropy(Var logits, std::span<const int> labels, const std::vector<bool>& mask);

}  // namespace vofde::ad

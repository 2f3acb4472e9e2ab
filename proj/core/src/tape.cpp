#include "vofde/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "vofde/errors.hpp"
#include "vofde/kernels.hpp"
#include "vofde/special.hpp"

namespace vofde::ad {

// ---- ParamStore -----------------------------------------------------------

void ParamStore::set(const std::string& name, Tensor value) {
    entries_.insert_or_assign(name, std::move(value));
}

bool ParamStore::contains(const std::string& name) const { return entries_.count(name) != 0; }

Tensor& ParamStore::at(const std::string& name) {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range(fmt::format("no parameter named '{}'", name));
    }
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range(fmt::format("no parameter named '{}'", name));
    }
    return it->second;
}

std::size_t ParamStore::scalar_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [name, t] : entries_) {
        n += t.size();
    }
    return n;
}

// ---- Tape -----------------------------------------------------------------

const Tensor& Var::value() const { return tape_->value(*this); }

Var Tape::constant(Tensor value) {
    nodes_.push_back(Node{std::move(value), {}, {}, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(const ParamStore& store, const std::string& name) {
    auto key = std::make_pair(&store, name);
    if (auto it = param_ids_.find(key); it != param_ids_.end()) {
        return Var(this, it->second);
    }
    nodes_.push_back(Node{store.at(name), {}, {}, true});
    const std::size_t id = nodes_.size() - 1;
    param_ids_.emplace(std::move(key), id);
    return Var(this, id);
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
    bool needs = false;
    for (const Var& in : inputs) {
        if (&in.tape() != this) {
            throw std::invalid_argument("tape: operands recorded on different tapes");
        }
        needs = needs || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : Backward{}, needs});
    return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(Var v, const Tensor& g) {
    Node& node = nodes_[v.id()];
    if (!node.requires_grad) {
        return;
    }
    if (node.grad.empty()) {
        node.grad = Tensor(node.value.shape(), 0.0);
    }
    auto dst = node.grad.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
}

void Tape::accumulate(Var v, std::size_t index, double g) {
    Node& node = nodes_[v.id()];
    if (!node.requires_grad) {
        return;
    }
    if (node.grad.empty()) {
        node.grad = Tensor(node.value.shape(), 0.0);
    }
    node.grad[index] += g;
}

void Tape::backward(Var loss) {
    if (loss.size() != 1) {
        throw ShapeError(fmt::format("backward: loss must be scalar, got shape {}", loss.shape()));
    }
    for (auto& node : nodes_) {
        node.grad = Tensor();
    }
    if (!nodes_[loss.id()].requires_grad) {
        return;
    }
    nodes_[loss.id()].grad = Tensor(nodes_[loss.id()].value.shape(), 1.0);
    for (std::size_t i = loss.id() + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.backward && !node.grad.empty()) {
            node.backward(*this, node.grad);
        }
    }
}

Tensor Tape::grad(Var v) const {
    const Node& node = nodes_[v.id()];
    return node.grad.empty() ? Tensor(node.value.shape(), 0.0) : node.grad;
}

ParamStore Tape::gradients(const ParamStore& store) const {
    ParamStore out;
    for (const auto& [name, value] : store) {
        auto it = param_ids_.find(std::make_pair(&store, name));
        if (it == param_ids_.end()) {
            out.set(name, Tensor(value.shape(), 0.0));
        } else {
            out.set(name, grad(Var(const_cast<Tape*>(this), it->second)));
        }
    }
    return out;
}

// ---- primitives -----------------------------------------------------------

namespace {

std::vector<std::size_t> broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() == b.shape()) {
        return a.shape();
    }
    if (a.size() == 1) {
        return b.shape();
    }
    if (b.size() == 1) {
        return a.shape();
    }
    throw ShapeError(fmt::format("{}: incompatible shapes {} and {}", op, a.shape(), b.shape()));
}

inline double bget(const Tensor& t, std::size_t i) { return t.size() == 1 ? t[0] : t[i]; }

void push_broadcast(Tape& tape, Var v, std::size_t i, double g) {
    tape.accumulate(v, v.size() == 1 ? 0 : i, g);
}

template <typename Fn>
Tensor map_unary(const Tensor& a, Fn fn) {
    Tensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = fn(a[i]);
    }
    return out;
}

void require_rank2(const char* op, const Tensor& t) {
    if (t.rank() != 2) {
        throw ShapeError(fmt::format("{}: expected a matrix, got shape {}", op, t.shape()));
    }
}

}  // namespace

Var add(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor out(broadcast_shape("add", av, bv));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = bget(av, i) + bget(bv, i);
    }
    const Var in[] = {a, b};
    return a.tape().record(std::move(out), in, [a, b](Tape& t, const Tensor& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            push_broadcast(t, a, i, g[i]);
            push_broadcast(t, b, i, g[i]);
        }
    });
}

Var sub(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor out(broadcast_shape("sub", av, bv));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = bget(av, i) - bget(bv, i);
    }
    const Var in[] = {a, b};
    return a.tape().record(std::move(out), in, [a, b](Tape& t, const Tensor& g) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            push_broadcast(t, a, i, g[i]);
            push_broadcast(t, b, i, -g[i]);
        }
    });
}

Var hadamard(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    Tensor out(broadcast_shape("hadamard", av, bv));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = bget(av, i) * bget(bv, i);
    }
    const Var in[] = {a, b};
    return a.tape().record(std::move(out), in, [a, b](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        for (std::size_t i = 0; i < g.size(); ++i) {
            push_broadcast(t, a, i, g[i] * bget(bv, i));
            push_broadcast(t, b, i, g[i] * bget(av, i));
        }
    });
}

Var add_scalar(Var a, double c) {
    Tensor out = map_unary(a.value(), [c](double x) { return x + c; });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in,
                           [a](Tape& t, const Tensor& g) { t.accumulate(a, g); });
}

Var scalar_mul(Var a, double c) {
    Tensor out = map_unary(a.value(), [c](double x) { return x * c; });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a, c](Tape& t, const Tensor& g) {
        t.accumulate(a, map_unary(g, [c](double x) { return x * c; }));
    });
}

Var neg(Var a) { return scalar_mul(a, -1.0); }

Var operator+(Var a, Var b) { return add(a, b); }
Var operator-(Var a, Var b) { return sub(a, b); }
Var operator*(Var a, Var b) { return hadamard(a, b); }
Var operator+(Var a, double c) { return add_scalar(a, c); }
Var operator+(double c, Var a) { return add_scalar(a, c); }
Var operator-(Var a, double c) { return add_scalar(a, -c); }
Var operator-(double c, Var a) { return add_scalar(neg(a), c); }
Var operator*(Var a, double c) { return scalar_mul(a, c); }
Var operator*(double c, Var a) { return scalar_mul(a, c); }
Var operator-(Var a) { return neg(a); }

Var matmul(Var a, Var b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    require_rank2("matmul", av);
    require_rank2("matmul", bv);
    const std::size_t m = av.rows();
    const std::size_t k = av.cols();
    const std::size_t n = bv.cols();
    if (bv.rows() != k) {
        throw ShapeError(fmt::format("matmul: inner dimensions differ ({} vs {})", av.shape(),
                                     bv.shape()));
    }
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = av[i * k + p];
            if (aip == 0.0) {
                continue;
            }
            const double* brow = &bv.data()[p * n];
            double* orow = &out.data()[i * n];
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += aip * brow[j];
            }
        }
    }
    const Var in[] = {a, b};
    return a.tape().record(std::move(out), in, [a, b, m, k, n](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        const Tensor& bv = t.value(b);
        if (t.requires_grad(a)) {
            Tensor ga({m, k});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                        acc += g[i * n + j] * bv[p * n + j];
                    }
                    ga[i * k + p] = acc;
                }
            }
            t.accumulate(a, ga);
        }
        if (t.requires_grad(b)) {
            Tensor gb({k, n});
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double aip = av[i * k + p];
                    if (aip == 0.0) {
                        continue;
                    }
                    for (std::size_t j = 0; j < n; ++j) {
                        gb[p * n + j] += aip * g[i * n + j];
                    }
                }
            }
            t.accumulate(b, gb);
        }
    });
}

Var transpose(Var a) {
    const Tensor& av = a.value();
    require_rank2("transpose", av);
    const std::size_t r = av.rows();
    const std::size_t c = av.cols();
    Tensor out({c, r});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[j * r + i] = av[i * c + j];
        }
    }
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a, r, c](Tape& t, const Tensor& g) {
        Tensor ga({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                ga[i * c + j] = g[j * r + i];
            }
        }
        t.accumulate(a, ga);
    });
}

Var add_row(Var a, Var bias) {
    const Tensor& av = a.value();
    const Tensor& bv = bias.value();
    require_rank2("add_row", av);
    const std::size_t r = av.rows();
    const std::size_t c = av.cols();
    if (bv.size() != c) {
        throw ShapeError(fmt::format("add_row: bias of size {} for {} columns", bv.size(), c));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] += bv[j];
        }
    }
    const Var in[] = {a, bias};
    return a.tape().record(std::move(out), in, [a, bias, r, c](Tape& t, const Tensor& g) {
        t.accumulate(a, g);
        if (t.requires_grad(bias)) {
            Tensor gb(t.value(bias).shape());
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t j = 0; j < c; ++j) {
                    gb[j] += g[i * c + j];
                }
            }
            t.accumulate(bias, gb);
        }
    });
}

Var sigmoid(Var a) {
    Tensor out = map_unary(a.value(), [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = 1.0 / (1.0 + std::exp(-av[i]));
            ga[i] = g[i] * s * (1.0 - s);
        }
        t.accumulate(a, ga);
    });
}

Var tanh(Var a) {
    Tensor out = map_unary(a.value(), [](double x) { return std::tanh(x); });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double th = std::tanh(av[i]);
            ga[i] = g[i] * (1.0 - th * th);
        }
        t.accumulate(a, ga);
    });
}

Var relu(Var a) {
    Tensor out = map_unary(a.value(), [](double x) { return x > 0.0 ? x : 0.0; });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = av[i] > 0.0 ? g[i] : 0.0;
        }
        t.accumulate(a, ga);
    });
}

Var exp(Var a) {
    Tensor out = map_unary(a.value(), [](double x) { return std::exp(x); });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = g[i] * std::exp(av[i]);
        }
        t.accumulate(a, ga);
    });
}

Var log(Var a) {
    const Tensor& av = a.value();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (!(av[i] > 0.0)) {
            throw DomainError(fmt::format("log: non-positive entry {}", av[i]));
        }
    }
    Tensor out = map_unary(av, [](double x) { return std::log(x); });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = g[i] / av[i];
        }
        t.accumulate(a, ga);
    });
}

Var square(Var a) {
    Tensor out = map_unary(a.value(), [](double x) { return x * x; });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = 2.0 * g[i] * av[i];
        }
        t.accumulate(a, ga);
    });
}

Var reciprocal(Var a) {
    const Tensor& av = a.value();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (av[i] == 0.0) {
            throw DomainError("reciprocal: zero entry");
        }
    }
    Tensor out = map_unary(av, [](double x) { return 1.0 / x; });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = -g[i] / (av[i] * av[i]);
        }
        t.accumulate(a, ga);
    });
}

Var sum(Var a) {
    const Tensor& av = a.value();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        acc += av[i];
    }
    const Var in[] = {a};
    return a.tape().record(Tensor::scalar(acc), in, [a](Tape& t, const Tensor& g) {
        t.accumulate(a, Tensor(t.value(a).shape(), g[0]));
    });
}

Var mean(Var a) { return scalar_mul(sum(a), 1.0 / static_cast<double>(a.size())); }

Var mean_rows(Var a) {
    const Tensor& av = a.value();
    const std::size_t r = av.rows();
    const std::size_t c = av.cols();
    Tensor out({c});
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            out[j] += av[i * c + j];
        }
    }
    const double inv = 1.0 / static_cast<double>(r);
    for (std::size_t j = 0; j < c; ++j) {
        out[j] *= inv;
    }
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a, r, c, inv](Tape& t, const Tensor& g) {
        Tensor ga(t.value(a).shape());
        for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                ga[i * c + j] = g[j] * inv;
            }
        }
        t.accumulate(a, ga);
    });
}

namespace {

Var softmax_impl(Var a, const Tensor* mask) {
    const Tensor& av = a.value();
    require_rank2("row_softmax", av);
    const std::size_t r = av.rows();
    const std::size_t c = av.cols();
    if (mask != nullptr && mask->shape() != av.shape()) {
        throw ShapeError(fmt::format("masked_row_softmax: mask shape {} vs logits {}",
                                     mask->shape(), av.shape()));
    }
    Tensor out({r, c});
    for (std::size_t i = 0; i < r; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < c; ++j) {
            if (mask == nullptr || (*mask)[i * c + j] != 0.0) {
                mx = std::max(mx, av[i * c + j]);
            }
        }
        if (!std::isfinite(mx)) {
            throw ShapeError(fmt::format("row_softmax: row {} has no admissible entry", i));
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            if (mask == nullptr || (*mask)[i * c + j] != 0.0) {
                const double e = std::exp(av[i * c + j] - mx);
                out[i * c + j] = e;
                z += e;
            }
        }
        for (std::size_t j = 0; j < c; ++j) {
            out[i * c + j] /= z;
        }
    }
    const Var in[] = {a};
    Tape& tape = a.tape();
    // keep the probabilities on a non-differentiable node for the adjoint
    Var probs = tape.constant(out);
    return tape.record(std::move(out), in, [a, probs, r, c](Tape& t, const Tensor& g) {
        const Tensor& s = t.value(probs);
        Tensor ga({r, c});
        for (std::size_t i = 0; i < r; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                dot += s[i * c + j] * g[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
                ga[i * c + j] = s[i * c + j] * (g[i * c + j] - dot);
            }
        }
        t.accumulate(a, ga);
    });
}

}  // namespace

Var row_softmax(Var a) { return softmax_impl(a, nullptr); }

Var masked_row_softmax(Var a, const Tensor& mask) { return softmax_impl(a, &mask); }

Var concat(std::span<const Var> parts) {
    if (parts.empty()) {
        throw ShapeError("concat: no operands");
    }
    std::vector<double> data;
    std::vector<std::size_t> offsets;
    for (const Var& p : parts) {
        offsets.push_back(data.size());
        const auto src = p.value().data();
        data.insert(data.end(), src.begin(), src.end());
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts.front().tape().record(
        Tensor::vector(std::move(data)), inputs,
        [inputs, offsets](Tape& t, const Tensor& g) {
            for (std::size_t k = 0; k < inputs.size(); ++k) {
                if (!t.requires_grad(inputs[k])) {
                    continue;
                }
                Tensor gk(t.value(inputs[k]).shape());
                for (std::size_t i = 0; i < gk.size(); ++i) {
                    gk[i] = g[offsets[k] + i];
                }
                t.accumulate(inputs[k], gk);
            }
        });
}

Var slice(Var a, std::size_t offset, std::size_t length) {
    const Tensor& av = a.value();
    if (length == 0 || offset + length > av.size()) {
        throw ShapeError(fmt::format("slice: [{}, {}) out of range for size {}", offset,
                                     offset + length, av.size()));
    }
    std::vector<double> data(av.data().begin() + static_cast<std::ptrdiff_t>(offset),
                             av.data().begin() + static_cast<std::ptrdiff_t>(offset + length));
    const Var in[] = {a};
    return a.tape().record(Tensor::vector(std::move(data)), in,
                           [a, offset](Tape& t, const Tensor& g) {
                               for (std::size_t i = 0; i < g.size(); ++i) {
                                   t.accumulate(a, offset + i, g[i]);
                               }
                           });
}

Var reshape(Var a, std::vector<std::size_t> shape) {
    Tensor out = a.value().reshaped(std::move(shape));
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        t.accumulate(a, g.reshaped(t.value(a).shape()));
    });
}

Var pow_const_base(const Tensor& base, Var exponent) {
    if (exponent.size() != 1) {
        throw ShapeError("pow_const_base: exponent must be a scalar");
    }
    const double e = exponent.item();
    Tensor out(base.shape());
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (base[i] < 0.0 || !std::isfinite(base[i])) {
            throw DomainError(fmt::format("pow_const_base: invalid base {}", base[i]));
        }
        out[i] = frac::kernel_pow(base[i], e);
    }
    Tape& tape = exponent.tape();
    Var base_node = tape.constant(base);
    const Var in[] = {exponent};
    Var out_node = tape.constant(out);
    return tape.record(std::move(out), in,
                       [exponent, base_node, out_node](Tape& t, const Tensor& g) {
                           const Tensor& b = t.value(base_node);
                           const Tensor& o = t.value(out_node);
                           double ge = 0.0;
                           for (std::size_t i = 0; i < g.size(); ++i) {
                               if (b[i] > 0.0) {
                                   ge += g[i] * o[i] * std::log(b[i]);
                               }
                           }
                           t.accumulate(exponent, 0, ge);
                       });
}

Var pow_const_base(double base, Var exponent) {
    return pow_const_base(Tensor::scalar(base), exponent);
}

Var pow_var_base(Var base, double exponent) {
    const Tensor& bv = base.value();
    for (std::size_t i = 0; i < bv.size(); ++i) {
        if (!(bv[i] > 0.0)) {
            throw DomainError(fmt::format("pow_var_base: base {} must be positive", bv[i]));
        }
    }
    Tensor out = map_unary(bv, [exponent](double x) { return std::pow(x, exponent); });
    const Var in[] = {base};
    return base.tape().record(std::move(out), in, [base, exponent](Tape& t, const Tensor& g) {
        const Tensor& bv = t.value(base);
        Tensor gb(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            gb[i] = g[i] * exponent * std::pow(bv[i], exponent - 1.0);
        }
        t.accumulate(base, gb);
    });
}

Var gamma_of(Var a) {
    const Tensor& av = a.value();
    for (std::size_t i = 0; i < av.size(); ++i) {
        if (!(av[i] > 0.0)) {
            throw DomainError(fmt::format("gamma_of: argument {} must be positive", av[i]));
        }
    }
    Tensor out = map_unary(av, [](double x) { return frac::gamma(x); });
    const Var in[] = {a};
    return a.tape().record(std::move(out), in, [a](Tape& t, const Tensor& g) {
        const Tensor& av = t.value(a);
        Tensor ga(g.shape());
        for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] = g[i] * frac::gamma(av[i]) * frac::digamma(av[i]);
        }
        t.accumulate(a, ga);
    });
}

Var lincomb(Var coeffs, std::span<const Var> terms) {
    const Tensor& cv = coeffs.value();
    if (terms.empty() || cv.size() != terms.size()) {
        throw ShapeError(fmt::format("lincomb: {} coefficients for {} terms", cv.size(),
                                     terms.size()));
    }
    const auto& shape = terms.front().shape();
    Tensor out(shape);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const Tensor& tj = terms[j].value();
        if (tj.shape() != shape) {
            throw ShapeError(fmt::format("lincomb: term {} has shape {}, expected {}", j,
                                         tj.shape(), shape));
        }
        const double c = cv[j];
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] += c * tj[i];
        }
    }
    std::vector<Var> inputs;
    inputs.reserve(terms.size() + 1);
    inputs.push_back(coeffs);
    inputs.insert(inputs.end(), terms.begin(), terms.end());
    return coeffs.tape().record(std::move(out), inputs, [inputs](Tape& t, const Tensor& g) {
        const Var coeffs = inputs.front();
        const Tensor& cv = t.value(coeffs);
        const bool need_c = t.requires_grad(coeffs);
        for (std::size_t j = 1; j < inputs.size(); ++j) {
            const Var term = inputs[j];
            if (need_c) {
                const Tensor& tv = t.value(term);
                double acc = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) {
                    acc += g[i] * tv[i];
                }
                t.accumulate(coeffs, j - 1, acc);
            }
            if (t.requires_grad(term)) {
                const double c = cv[j - 1];
                Tensor gt(g.shape());
                for (std::size_t i = 0; i < g.size(); ++i) {
                    gt[i] = c * g[i];
                }
                t.accumulate(term, gt);
            }
        }
    });
}

Var softmax_cross_entropy(Var logits, std::span<const int> labels, const std::vector<bool>& mask) {
    const Tensor& lv = logits.value();
    require_rank2("softmax_cross_entropy", lv);
    const std::size_t r = lv.rows();
    const std::size_t c = lv.cols();
    if (labels.size() != r || mask.size() != r) {
        throw ShapeError(fmt::format("softmax_cross_entropy: {} rows, {} labels, {} mask entries",
                                     r, labels.size(), mask.size()));
    }
    std::size_t count = 0;
    for (bool m : mask) {
        count += m ? 1 : 0;
    }
    if (count == 0) {
        throw ShapeError("softmax_cross_entropy: empty mask");
    }
    Tensor probs({r, c});
    double loss = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        double mx = lv[i * c];
        for (std::size_t j = 1; j < c; ++j) {
            mx = std::max(mx, lv[i * c + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] = std::exp(lv[i * c + j] - mx);
            z += probs[i * c + j];
        }
        for (std::size_t j = 0; j < c; ++j) {
            probs[i * c + j] /= z;
        }
        if (mask[i]) {
            const int y = labels[i];
            if (y < 0 || static_cast<std::size_t>(y) >= c) {
                throw ShapeError(fmt::format("softmax_cross_entropy: label {} out of range", y));
            }
            loss += (std::log(z) + mx) - lv[i * c + static_cast<std::size_t>(y)];
        }
    }
    const double inv = 1.0 / static_cast<double>(count);
    Tape& tape = logits.tape();
    Var probs_node = tape.constant(std::move(probs));
    std::vector<int> lab(labels.begin(), labels.end());
    std::vector<bool> msk = mask;
    const Var in[] = {logits};
    return tape.record(Tensor::scalar(loss * inv), in,
                       [logits, probs_node, lab, msk, inv, r, c](Tape& t, const Tensor& g) {
                           const Tensor& p = t.value(probs_node);
                           Tensor gl({r, c});
                           for (std::size_t i = 0; i < r; ++i) {
                               if (!msk[i]) {
                                   continue;
                               }
                               for (std::size_t j = 0; j < c; ++j) {
                                   const double onehot =
                                       static_cast<int>(j) == lab[i] ? 1.0 : 0.0;
                                   gl[i * c + j] = g[0] * inv * (p[i * c + j] - onehot);
                               }
                           }
                           t.accumulate(logits, gl);
                       });
}

}  // namespace vofde::ad

#include "vofde/nn.hpp"

#include <cmath>

#include <fmt/format.h>

#include "vofde/errors.hpp"

namespace vofde::ad {

Var activate(Var x, Activation act) {
    switch (act) {
        case Activation::Linear:
            return x;
        case Activation::Tanh:
            return tanh(x);
        case Activation::Sigmoid:
            return sigmoid(x);
        case Activation::Relu:
            return relu(x);
    }
    return x;
}

Var mlp_forward(std::span<const Layer> layers, Var input) {
    Var h = input;
    for (const Layer& layer : layers) {
        h = activate(add_row(matmul(h, layer.weight), layer.bias), layer.activation);
    }
    return h;
}

Mlp::Mlp(std::string prefix, std::vector<std::size_t> widths, Activation hidden,
         Activation output)
    : prefix_(std::move(prefix)), widths_(std::move(widths)), hidden_(hidden), output_(output) {
    if (widths_.size() < 2) {
        throw ShapeError("Mlp: need at least input and output widths");
    }
    for (auto w : widths_) {
        if (w == 0) {
            throw ShapeError("Mlp: zero layer width");
        }
    }
}

std::string Mlp::weight_name(std::size_t layer) const {
    return fmt::format("{}.w{}", prefix_, layer);
}

std::string Mlp::bias_name(std::size_t layer) const {
    return fmt::format("{}.b{}", prefix_, layer);
}

void Mlp::initialize(ParamStore& store, std::mt19937_64& rng) const {
    for (std::size_t k = 0; k < layer_count(); ++k) {
        const std::size_t in = widths_[k];
        const std::size_t out = widths_[k + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        Tensor w({in, out});
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] = dist(rng);
        }
        store.set(weight_name(k), std::move(w));
        store.set(bias_name(k), Tensor({out}, 0.0));
    }
}

std::vector<Layer> Mlp::bind(Tape& tape, const ParamStore& store) const {
    std::vector<Layer> layers;
    layers.reserve(layer_count());
    for (std::size_t k = 0; k < layer_count(); ++k) {
        const Activation act = (k + 1 == layer_count()) ? output_ : hidden_;
        layers.push_back(Layer{tape.param(store, weight_name(k)), tape.param(store, bias_name(k)),
                               act});
    }
    return layers;
}

Var Mlp::forward(Tape& tape, const ParamStore& store, Var input) const {
    const auto layers = bind(tape, store);
    return mlp_forward(layers, input);
}

}  // namespace vofde::ad

#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vofde/tape.hpp"

namespace vofde::ad {

enum class Activation { Linear, Tanh, Sigmoid, Relu };

Var activate(Var x, Activation act);

// Bound layer: weight [in, out], bias [out].
struct Layer {
    Var weight;
    Var bias;
    Activation activation = Activation::Linear;
};

// input [batch, in] -> [batch, out] through x W + b and the activation, per layer.
Var mlp_forward(std::span<const Layer> layers, Var input);

// Fully connected network description. Parameters live in a ParamStore
// under "<prefix>.w<k>" / "<prefix>.b<k>".
class Mlp {
public:
    Mlp() = default;
    Mlp(std::string prefix, std::vector<std::size_t> widths, Activation hidden,
        Activation output = Activation::Linear);

    // Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    void initialize(ParamStore& store, std::mt19937_64& rng) const;

    std::vector<Layer> bind(Tape& tape, const ParamStore& store) const;
    Var forward(Tape& tape, const ParamStore& store, Var input) const;

    std::string weight_name(std::size_t layer) const;
    std::string bias_name(std::size_t layer) const;
    std::size_t layer_count() const noexcept { return widths_.empty() ? 0 : widths_.size() - 1; }
    std::size_t input_width() const { return widths_.front(); }
    std::size_t output_width() const { return widths_.back(); }
    const std::vector<std::size_t>& widths() const noexcept { return widths_; }

private:
    std::string prefix_;
    std::vector<std::size_t> widths_;
    Activation hidden_ = Activation::Tanh;
    Activation output_ = Activation::Linear;
};

}  // namespace vofde::ad

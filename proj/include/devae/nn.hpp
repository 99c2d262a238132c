#pragma once

#include <string>
#include <vector>

#include "devae/random.hpp"
#include "devae/tensor.hpp"

namespace devae {

enum class Activation { identity, relu, sigmoid };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Fully connected layer: activation(input * weight^T + bias).
struct DenseLayer {
    Tensor weight;  // [out, in]
    Tensor bias;    // [out]
    Activation activation = Activation::identity;

    DenseLayer() = default;
    DenseLayer(Tensor w, Tensor b, Activation act);

    // Kaiming-style uniform fan-in init: U(-g*sqrt(3/in), g*sqrt(3/in)) with
    // gain sqrt(2) ahead of relu and 1 otherwise; bias starts at zero.
    static DenseLayer init(std::size_t in, std::size_t out, Activation act, Rng& rng);

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }

    std::vector<Tensor> parameters() const { return {weight, bias}; }
};

// Throws DimensionError naming both shapes when input's width != in_dim().
Tensor forward_dense(const DenseLayer& layer, const Tensor& input);

Tensor apply_activation(const Tensor& t, Activation a);

}  // namespace devae

#include "devae/nn.hpp"

#include <cmath>

#include "devae/errors.hpp"

namespace devae {

std::string to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "sigmoid") return Activation::sigmoid;
    throw ContractError("unknown activation '" + s + "'");
}

DenseLayer::DenseLayer(Tensor w, Tensor b, Activation act)
    : weight(std::move(w)), bias(std::move(b)), activation(act) {
    if (weight.rank() != 2 || bias.rank() != 1 || bias.numel() != weight.rows()) {
        throw DimensionError("dense layer weight " + shape_str(weight.shape()) + " and bias " +
                             shape_str(bias.shape()) + " are inconsistent");
    }
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    const double gain = act == Activation::relu ? std::sqrt(2.0) : 1.0;
    const double bound = gain * std::sqrt(3.0 / static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(in * out);
    for (auto& v : w) v = u(rng);
    return DenseLayer(Tensor({out, in}, std::move(w), true), Tensor::zeros({out}, true), act);
}

Tensor apply_activation(const Tensor& t, Activation a) {
    switch (a) {
        case Activation::relu: return relu(t);
        case Activation::sigmoid: return sigmoid(t);
        case Activation::identity: break;
    }
    return t;
}

Tensor forward_dense(const DenseLayer& layer, const Tensor& input) {
    if (input.rank() != 2 || input.cols() != layer.in_dim()) {
        throw DimensionError("dense layer expects input [batch, " + std::to_string(layer.in_dim()) +
                             "] for weight " + shape_str(layer.weight.shape()) + ", got " +
                             shape_str(input.shape()));
    }
    return apply_activation(matmul_bt(input, layer.weight) + layer.bias, layer.activation);
}

}  // namespace devae

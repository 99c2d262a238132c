#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "devae/gaussian.hpp"
#include "devae/losses.hpp"
#include "devae/nn.hpp"
#include "devae/tensor.hpp"

namespace devae {

enum class ReconKind { mse, bce };

std::string to_string(ReconKind r);
ReconKind recon_from_string(const std::string& s);

struct ModelConfig {
    std::size_t input_dim = 0;
    std::size_t latent_dim = 2;
    std::vector<std::size_t> encoder_widths{512, 128};
    std::vector<std::size_t> decoder_widths{128, 512};
    Head head = Head::full;
    ReconKind recon = ReconKind::bce;
    LossWeights weights;
    std::uint64_t seed = 0;

    void validate() const;
    // Compact JSON with sorted keys; stable across runs.
    std::string to_text() const;
    static ModelConfig from_text(const std::string& text);

    bool operator==(const ModelConfig&) const = default;
};

// Encoder trunk -> {mu head, covariance head}; decoder q -> ... -> d.
// Hidden layers use relu; the decoder output is sigmoid for BCE and
// identity for MSE. Copies are deep.
class Model {
public:
    explicit Model(ModelConfig config);

    Model(const Model& other);
    Model& operator=(const Model& other);
    Model(Model&&) noexcept = default;
    Model& operator=(Model&&) noexcept = default;

    const ModelConfig& config() const { return config_; }

    // x: [batch, d] -> per-row mean and covariance parameters.
    LatentBatch encode(const Tensor& x) const;
    // z: [batch, q] -> [batch, d]. Any point of the latent plane is valid.
    Tensor decode(const Tensor& z) const;

    // Parameter handles in declared topology order: encoder trunk, mu head,
    // covariance head (absent for head none), decoder. Weight before bias.
    std::vector<Tensor> parameters() const;
    std::size_t parameter_count() const;

    // Overwrites every parameter value with other's; topologies must match.
    void copy_parameters_from(const Model& other);

private:
    ModelConfig config_;
    std::vector<DenseLayer> encoder_;
    DenseLayer mu_head_;
    std::optional<DenseLayer> cov_head_;
    std::vector<DenseLayer> decoder_;
};

struct ForwardResult {
    LossBreakdown losses;
    Tensor total;  // differentiable scalar
    Tensor recon;
    Tensor proj;
    Tensor ent;
    Tensor x_hat;
    LatentBatch latents;
};

// encode -> reparameterized sample (mu for head none) -> decode -> losses.
// eps is [batch, q] standard-normal noise; pass zeros for deterministic
// evaluation. Throws DivergenceError when any component is non-finite.
ForwardResult forward_train(const Model& model, const Tensor& x, const Tensor& y, const Tensor& eps);

// Reconstruction term matching the model's recon kind.
Tensor recon_loss(ReconKind kind, const Tensor& x, const Tensor& x_hat);

// --- checkpoint -----------------------------------------------------------
// Layout: "DEVAE" | u8 version | u32 LE config length | config JSON |
// every parameter value as LE float64 in parameters() order.

inline constexpr std::uint8_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Model& model);
Model parse_checkpoint(const std::string& bytes);
void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

}  // namespace devae

#pragma once

#include <span>

#include "devae/gaussian.hpp"
#include "devae/tensor.hpp"

namespace devae {

struct LossWeights {
    double lambda_proj = 20.0;
    double lambda_ent = 5.0;

    // Throws ContractError unless both weights are finite and >= 0.
    void validate() const;
    bool operator==(const LossWeights&) const = default;
};

// ent is L_ent = -H and may be negative.
struct LossBreakdown {
    double recon = 0.0;
    double proj = 0.0;
    double ent = 0.0;
    double total = 0.0;
};

inline constexpr double kBceClamp = 1e-7;

// Reductions: sum over features per sample, mean over the batch.
Tensor recon_mse(const Tensor& x, const Tensor& x_hat);
// x must lie in [0,1] (DomainError otherwise); x_hat is clamped to
// [kBceClamp, 1 - kBceClamp] before the logs.
Tensor recon_bce(const Tensor& x, const Tensor& x_hat);
// Mean over the batch of ||y - mu||^2.
Tensor proj_loss(const Tensor& y, const Tensor& mu);
// Mean over the batch of -H; exactly 0 for head none.
Tensor ent_loss(const LatentBatch& latents);
// Value-level form; ContractError when the latents do not share one head.
double ent_loss(std::span<const GaussianLatent> latents);

// recon + lambda_proj * proj + lambda_ent * ent. Throws DivergenceError
// naming the first non-finite component.
LossBreakdown total_loss(double recon, double proj, double ent, const LossWeights& w);

}  // namespace devae

#include "devae/losses.hpp"

#include <cmath>
#include <string>

#include "devae/errors.hpp"

namespace devae {

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(what) + ": shape " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
    }
}

double batch_size(const Tensor& t) { return static_cast<double>(t.rank() == 2 ? t.rows() : 1); }

}  // namespace

void LossWeights::validate() const {
    if (!std::isfinite(lambda_proj) || lambda_proj < 0.0) {
        throw ContractError("lambda_proj must be finite and >= 0, got " + std::to_string(lambda_proj));
    }
    if (!std::isfinite(lambda_ent) || lambda_ent < 0.0) {
        throw ContractError("lambda_ent must be finite and >= 0, got " + std::to_string(lambda_ent));
    }
}

Tensor recon_mse(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "recon_mse");
    return scale(sum(square(x - x_hat)), 1.0 / batch_size(x));
}

Tensor recon_bce(const Tensor& x, const Tensor& x_hat) {
    require_same_shape(x, x_hat, "recon_bce");
    for (double v : x.values()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw DomainError("binary cross-entropy target " + std::to_string(v) + " is outside [0,1]");
        }
    }
    const Tensor p = clamp(x_hat, kBceClamp, 1.0 - kBceClamp);
    const Tensor one_minus_x = 1.0 + neg(x);
    const Tensor ll = x * log(p) + one_minus_x * log(1.0 + neg(p));
    return scale(sum(ll), -1.0 / batch_size(x));
}

Tensor proj_loss(const Tensor& y, const Tensor& mu) {
    require_same_shape(y, mu, "proj_loss");
    return scale(sum(square(y - mu)), 1.0 / batch_size(y));
}

Tensor ent_loss(const LatentBatch& latents) {
    if (latents.head == Head::none) return Tensor::scalar(0.0);
    return neg(mean(entropy(latents)));
}

double ent_loss(std::span<const GaussianLatent> latents) {
    if (latents.empty()) throw ContractError("ent_loss needs a non-empty batch");
    const Head head = latents.front().head;
    double acc = 0.0;
    for (const auto& l : latents) {
        if (l.head != head) {
            throw ContractError("ent_loss batch mixes heads '" + to_string(head) + "' and '" +
                                to_string(l.head) + "'");
        }
        acc -= entropy(l);
    }
    return head == Head::none ? 0.0 : acc / static_cast<double>(latents.size());
}

LossBreakdown total_loss(double recon, double proj, double ent, const LossWeights& w) {
    if (!std::isfinite(recon)) throw DivergenceError("reconstruction loss is not finite");
    if (!std::isfinite(proj)) throw DivergenceError("projection loss is not finite");
    if (!std::isfinite(ent)) throw DivergenceError("entropy loss is not finite");
    LossBreakdown b{recon, proj, ent, recon + w.lambda_proj * proj + w.lambda_ent * ent};
    if (!std::isfinite(b.total)) throw DivergenceError("total loss is not finite");
    return b;
}

}  // namespace devae

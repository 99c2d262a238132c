#pragma once

// Latent Gaussian families: isotropic (sigma^2 I), diagonal (diag sigma_i^2)
// and full (L L^T with lower-triangular L), plus the mean-only "none" head.
//
// Parameterization: variances are carried as log sigma^2; the Cholesky factor
// is carried as raw values where the diagonal is exp(raw) and the strict
// lower triangle is used as-is. Raw ordering for the full head is the strict
// lower triangle in row-major order followed by the q diagonal raws, so for
// q = 2 the vector is (L10, raw00, raw11).

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "devae/tensor.hpp"

namespace devae {

enum class Head { none, isotropic, diagonal, full };

std::string to_string(Head h);
Head head_from_string(const std::string& s);
// Width of the covariance parameter block the encoder emits for a head.
std::size_t head_param_count(Head h, std::size_t q);

// ln(2 pi)
inline constexpr double kLog2Pi = 1.8378770664093454836;

struct GaussianLatent {
    Head head = Head::none;
    std::vector<double> mu;
    std::vector<double> log_var;   // isotropic: 1 value, diagonal: q values
    std::vector<double> chol_raw;  // full: q(q+1)/2 values

    static GaussianLatent mean_only(std::vector<double> mu);
    static GaussianLatent isotropic(std::vector<double> mu, double log_var);
    static GaussianLatent diagonal(std::vector<double> mu, std::vector<double> log_vars);
    static GaussianLatent full(std::vector<double> mu, std::vector<double> chol_raw);
    // Builds the raw block from an explicit row-major q x q factor L. The
    // diagonal must be positive; the upper triangle is ignored.
    static GaussianLatent from_cholesky(std::vector<double> mu, std::span<const double> L);

    std::size_t dim() const { return mu.size(); }
    // Row-major q x q lower-triangular factor with positive diagonal.
    // isotropic/diagonal heads give diag(sigma); throws for head none.
    std::vector<double> cholesky() const;
    // Throws ContractError when the parameter block does not match the head.
    void validate() const;
};

double entropy_isotropic(std::size_t q, double log_var);
double entropy_diagonal(std::span<const double> log_vars);
// Only the diagonal of L enters; throws GeometryError on a non-positive entry.
double entropy_full(std::span<const double> chol_diag);
// Dispatches on the head; head none has zero entropy contribution.
double entropy(const GaussianLatent& latent);

// Reparameterized draw mu + scale * eps. Head none returns mu.
std::vector<double> sample(const GaussianLatent& latent, std::span<const double> eps);

using Mat2 = std::array<std::array<double, 2>, 2>;

// Sigma for a 2-D latent. UnsupportedHeadError for head none.
Mat2 covariance_matrix(const GaussianLatent& latent);

struct EllipseSpec {
    std::array<double, 2> center{};
    std::array<double, 2> semi_axes{};  // major first
    double rotation = 0.0;              // major axis angle from +x, in (-pi/2, pi/2]
    int k = 1;                          // standard-deviation multiple
};

// k-sigma ellipse of N(center, cov). Equal eigenvalues give rotation 0.
EllipseSpec ellipse_from_cov(std::array<double, 2> center, const Mat2& cov, int k);

// `count` points evenly spaced in parameter angle along the boundary.
std::vector<std::array<double, 2>> ellipse_boundary(const EllipseSpec& e, std::size_t count);

// --- batched, differentiable form used by the model ---------------------------

struct LatentBatch {
    Head head = Head::none;
    Tensor mu;        // [b, q]
    Tensor log_var;   // isotropic [b, 1], diagonal [b, q]
    Tensor chol_raw;  // full [b, q(q+1)/2]

    std::size_t size() const { return mu.rows(); }
    std::size_t dim() const { return mu.cols(); }
    GaussianLatent at(std::size_t i) const;
    std::vector<GaussianLatent> unpack() const;
};

// Per-sample entropies, all shaped [b, 1].
Tensor entropy_isotropic(std::size_t q, const Tensor& log_var);
Tensor entropy_diagonal(const Tensor& log_vars);
Tensor entropy_full(const Tensor& chol_diag);
Tensor entropy(const LatentBatch& latents);

// exp of the diagonal raws, [b, q].
Tensor cholesky_diagonal(const LatentBatch& latents);

// z = mu + scale * eps for every row; eps is [b, q]. Head none returns mu.
Tensor sample(const LatentBatch& latents, const Tensor& eps);

}  // namespace devae

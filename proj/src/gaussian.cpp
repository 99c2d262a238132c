#include "devae/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "devae/errors.hpp"

namespace devae {

namespace {

constexpr double kHalfLogTwoPiE = 0.5 * (1.0 + kLog2Pi);

std::size_t lower_count(std::size_t q) { return q * (q - 1) / 2; }

// Index of L[i][j] (i > j) inside the raw block.
std::size_t lower_index(std::size_t i, std::size_t j) { return i * (i - 1) / 2 + j; }

}  // namespace

std::string to_string(Head h) {
    switch (h) {
        case Head::none: return "none";
        case Head::isotropic: return "isotropic";
        case Head::diagonal: return "diagonal";
        case Head::full: return "full";
    }
    return "none";
}

Head head_from_string(const std::string& s) {
    if (s == "none") return Head::none;
    if (s == "isotropic") return Head::isotropic;
    if (s == "diagonal") return Head::diagonal;
    if (s == "full") return Head::full;
    throw ContractError("unknown head '" + s + "' (expected none, isotropic, diagonal or full)");
}

std::size_t head_param_count(Head h, std::size_t q) {
    switch (h) {
        case Head::none: return 0;
        case Head::isotropic: return 1;
        case Head::diagonal: return q;
        case Head::full: return q * (q + 1) / 2;
    }
    return 0;
}

// --- GaussianLatent ------------------------------------------------------------

GaussianLatent GaussianLatent::mean_only(std::vector<double> mu) {
    GaussianLatent g;
    g.mu = std::move(mu);
    return g;
}

GaussianLatent GaussianLatent::isotropic(std::vector<double> mu, double log_var) {
    GaussianLatent g;
    g.head = Head::isotropic;
    g.mu = std::move(mu);
    g.log_var = {log_var};
    return g;
}

GaussianLatent GaussianLatent::diagonal(std::vector<double> mu, std::vector<double> log_vars) {
    GaussianLatent g;
    g.head = Head::diagonal;
    g.mu = std::move(mu);
    g.log_var = std::move(log_vars);
    g.validate();
    return g;
}

GaussianLatent GaussianLatent::full(std::vector<double> mu, std::vector<double> chol_raw) {
    GaussianLatent g;
    g.head = Head::full;
    g.mu = std::move(mu);
    g.chol_raw = std::move(chol_raw);
    g.validate();
    return g;
}

GaussianLatent GaussianLatent::from_cholesky(std::vector<double> mu, std::span<const double> L) {
    const std::size_t q = mu.size();
    if (L.size() != q * q) throw DimensionError("Cholesky factor must be q x q");
    std::vector<double> raw(head_param_count(Head::full, q));
    for (std::size_t i = 1; i < q; ++i) {
        for (std::size_t j = 0; j < i; ++j) raw[lower_index(i, j)] = L[i * q + j];
    }
    for (std::size_t i = 0; i < q; ++i) {
        const double d = L[i * q + i];
        if (!(d > 0.0)) throw GeometryError("Cholesky diagonal must be positive");
        raw[lower_count(q) + i] = std::log(d);
    }
    return full(std::move(mu), std::move(raw));
}

void GaussianLatent::validate() const {
    const std::size_t q = mu.size();
    if (q == 0) throw ContractError("latent mean must be non-empty");
    const bool ok = [&] {
        switch (head) {
            case Head::none: return log_var.empty() && chol_raw.empty();
            case Head::isotropic: return log_var.size() == 1 && chol_raw.empty();
            case Head::diagonal: return log_var.size() == q && chol_raw.empty();
            case Head::full: return log_var.empty() && chol_raw.size() == head_param_count(Head::full, q);
        }
        return false;
    }();
    if (!ok) throw ContractError("parameter block does not match head '" + to_string(head) + "'");
}

std::vector<double> GaussianLatent::cholesky() const {
    const std::size_t q = dim();
    std::vector<double> L(q * q, 0.0);
    switch (head) {
        case Head::none:
            throw UnsupportedHeadError("head 'none' carries no covariance");
        case Head::isotropic:
            for (std::size_t i = 0; i < q; ++i) L[i * q + i] = std::exp(0.5 * log_var[0]);
            break;
        case Head::diagonal:
            for (std::size_t i = 0; i < q; ++i) L[i * q + i] = std::exp(0.5 * log_var[i]);
            break;
        case Head::full:
            for (std::size_t i = 1; i < q; ++i) {
                for (std::size_t j = 0; j < i; ++j) L[i * q + j] = chol_raw[lower_index(i, j)];
            }
            for (std::size_t i = 0; i < q; ++i) L[i * q + i] = std::exp(chol_raw[lower_count(q) + i]);
            break;
    }
    return L;
}

// --- entropies -------------------------------------------------------------------

double entropy_isotropic(std::size_t q, double log_var) {
    return 0.5 * static_cast<double>(q) * (1.0 + kLog2Pi + log_var);
}

double entropy_diagonal(std::span<const double> log_vars) {
    double h = 0.0;
    for (double lv : log_vars) h += 1.0 + kLog2Pi + lv;
    return 0.5 * h;
}

double entropy_full(std::span<const double> chol_diag) {
    double h = kHalfLogTwoPiE * static_cast<double>(chol_diag.size());
    for (double d : chol_diag) {
        if (!(d > 0.0)) throw GeometryError("Cholesky diagonal entry " + std::to_string(d) + " is not positive");
        h += std::log(d);
    }
    return h;
}

double entropy(const GaussianLatent& latent) {
    latent.validate();
    const std::size_t q = latent.dim();
    switch (latent.head) {
        case Head::none: return 0.0;
        case Head::isotropic: return entropy_isotropic(q, latent.log_var[0]);
        case Head::diagonal: return entropy_diagonal(latent.log_var);
        case Head::full: {
            std::vector<double> d(q);
            for (std::size_t i = 0; i < q; ++i) d[i] = std::exp(latent.chol_raw[lower_count(q) + i]);
            return entropy_full(d);
        }
    }
    return 0.0;
}

std::vector<double> sample(const GaussianLatent& latent, std::span<const double> eps) {
    latent.validate();
    if (latent.head == Head::none) return latent.mu;
    const std::size_t q = latent.dim();
    if (eps.size() != q) {
        throw DimensionError("noise has " + std::to_string(eps.size()) + " entries, latent has " +
                             std::to_string(q));
    }
    const auto L = latent.cholesky();
    std::vector<double> z = latent.mu;
    for (std::size_t i = 0; i < q; ++i) {
        for (std::size_t j = 0; j <= i; ++j) z[i] += L[i * q + j] * eps[j];
    }
    return z;
}

Mat2 covariance_matrix(const GaussianLatent& latent) {
    latent.validate();
    if (latent.head == Head::none) throw UnsupportedHeadError("head 'none' has no covariance matrix");
    if (latent.dim() != 2) throw DimensionError("covariance_matrix expects a 2-D latent");
    const auto L = latent.cholesky();
    Mat2 s{};
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 2; ++k) acc += L[i * 2 + k] * L[j * 2 + k];
            s[i][j] = acc;
        }
    }
    return s;
}

// --- ellipses ----------------------------------------------------------------------

EllipseSpec ellipse_from_cov(std::array<double, 2> center, const Mat2& cov, int k) {
    if (k < 1 || k > 3) throw ContractError("ellipse multiple k must be 1, 2 or 3");
    const double a = cov[0][0], b = cov[0][1], c = cov[1][1];
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c), 1e-300});
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(c) ||
        std::abs(b - cov[1][0]) > 1e-12 * scale) {
        throw GeometryError("covariance is not a finite symmetric matrix");
    }
    const double det = a * c - b * b;
    if (!(a > 0.0) || !(det > 0.0)) throw GeometryError("covariance is not positive definite");

    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    const double major = mid + rad;
    const double minor = det / major;  // avoids cancellation in mid - rad

    EllipseSpec e;
    e.center = center;
    e.k = k;
    e.semi_axes = {k * std::sqrt(major), k * std::sqrt(minor)};
    // atan2(0, 0) = 0 settles the isotropic tie toward rotation 0.
    e.rotation = rad == 0.0 ? 0.0 : 0.5 * std::atan2(2.0 * b, a - c);
    if (e.rotation <= -std::numbers::pi / 2) e.rotation += std::numbers::pi;
    return e;
}

std::vector<std::array<double, 2>> ellipse_boundary(const EllipseSpec& e, std::size_t count) {
    std::vector<std::array<double, 2>> pts(count);
    const double cr = std::cos(e.rotation), sr = std::sin(e.rotation);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(count);
        const double u = e.semi_axes[0] * std::cos(t);
        const double v = e.semi_axes[1] * std::sin(t);
        pts[i] = {e.center[0] + cr * u - sr * v, e.center[1] + sr * u + cr * v};
    }
    return pts;
}

// --- batched -------------------------------------------------------------------------

GaussianLatent LatentBatch::at(std::size_t i) const {
    auto row = [i](const Tensor& t) {
        const std::size_t w = t.cols();
        const auto v = t.values();
        return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(i * w),
                                   v.begin() + static_cast<std::ptrdiff_t>((i + 1) * w));
    };
    switch (head) {
        case Head::none: return GaussianLatent::mean_only(row(mu));
        case Head::isotropic: return GaussianLatent::isotropic(row(mu), log_var.values()[i]);
        case Head::diagonal: return GaussianLatent::diagonal(row(mu), row(log_var));
        case Head::full: return GaussianLatent::full(row(mu), row(chol_raw));
    }
    return GaussianLatent::mean_only(row(mu));
}

std::vector<GaussianLatent> LatentBatch::unpack() const {
    std::vector<GaussianLatent> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(at(i));
    return out;
}

Tensor entropy_isotropic(std::size_t q, const Tensor& log_var) {
    const double half_q = 0.5 * static_cast<double>(q);
    return scale(log_var, half_q) + half_q * (1.0 + kLog2Pi);
}

Tensor entropy_diagonal(const Tensor& log_vars) {
    const double q = static_cast<double>(log_vars.cols());
    return scale(row_sum(log_vars), 0.5) + kHalfLogTwoPiE * q;
}

Tensor entropy_full(const Tensor& chol_diag) {
    const double q = static_cast<double>(chol_diag.cols());
    return row_sum(log(chol_diag)) + kHalfLogTwoPiE * q;
}

Tensor cholesky_diagonal(const LatentBatch& latents) {
    if (latents.head != Head::full) throw UnsupportedHeadError("cholesky_diagonal needs the full head");
    const std::size_t q = latents.dim();
    std::vector<Tensor> cols;
    for (std::size_t i = 0; i < q; ++i) cols.push_back(column(latents.chol_raw, lower_count(q) + i));
    return exp(concat_cols(cols));
}

Tensor entropy(const LatentBatch& latents) {
    switch (latents.head) {
        case Head::none: return Tensor::zeros({latents.size(), 1});
        case Head::isotropic: return entropy_isotropic(latents.dim(), latents.log_var);
        case Head::diagonal: return entropy_diagonal(latents.log_var);
        case Head::full: return entropy_full(cholesky_diagonal(latents));
    }
    return Tensor::zeros({latents.size(), 1});
}

Tensor sample(const LatentBatch& latents, const Tensor& eps) {
    if (latents.head == Head::none) return latents.mu;
    if (eps.shape() != latents.mu.shape()) {
        throw DimensionError("noise shape " + shape_str(eps.shape()) + " does not match latent mean " +
                             shape_str(latents.mu.shape()));
    }
    switch (latents.head) {
        case Head::isotropic:
        case Head::diagonal:
            return latents.mu + exp(scale(latents.log_var, 0.5)) * eps;
        case Head::full: {
            const std::size_t q = latents.dim();
            const Tensor diag = cholesky_diagonal(latents);
            std::vector<Tensor> z;
            for (std::size_t i = 0; i < q; ++i) {
                Tensor zi = column(latents.mu, i) + column(diag, i) * column(eps, i);
                for (std::size_t j = 0; j < i; ++j) {
                    zi = zi + column(latents.chol_raw, lower_index(i, j)) * column(eps, j);
                }
                z.push_back(zi);
            }
            return concat_cols(z);
        }
        case Head::none: break;
    }
    return latents.mu;
}

}  // namespace devae

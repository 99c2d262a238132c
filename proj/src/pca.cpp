#include <cmath>
#include <numeric>

#include "devae/data.hpp"
#include "devae/errors.hpp"
#include "devae/random.hpp"

namespace devae {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double normalize(std::vector<double>& v) {
    const double n = std::sqrt(dot(v, v));
    if (n > 0.0) {
        for (auto& x : v) x /= n;
    }
    return n;
}

void remove_component(std::vector<double>& v, std::span<const double> axis) {
    const double p = dot(v, axis);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * axis[i];
}

// y = C v for symmetric C (row-major d x d).
void multiply(const std::vector<double>& C, const std::vector<double>& v, std::vector<double>& y) {
    const std::size_t d = v.size();
    for (std::size_t i = 0; i < d; ++i) y[i] = dot({&C[i * d], d}, v);
}

}  // namespace

PcaResult pca(const Matrix& X) {
    const std::size_t n = X.rows, d = X.cols;
    if (n < 3 || d < 2) throw DataError("pca needs at least 3 samples and 2 dimensions");

    std::vector<double> mean(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) mean[c] += X.at(r, c);
    }
    for (auto& m : mean) m /= static_cast<double>(n);

    std::vector<double> C(d * d, 0.0);
    std::vector<double> row(d);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) row[c] = X.at(r, c) - mean[c];
        for (std::size_t i = 0; i < d; ++i) {
            const double ri = row[i];
            double* Ci = &C[i * d];
            for (std::size_t j = i; j < d; ++j) Ci[j] += ri * row[j];
        }
    }
    const double denom = static_cast<double>(n - 1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            C[i * d + j] /= denom;
            C[j * d + i] = C[i * d + j];
        }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) trace += C[i * d + i];
    if (!(trace > 0.0)) throw DataError("pca: data has zero variance");

    Rng rng = make_rng(0, SeedStream::pca);
    std::normal_distribution<double> normal(0.0, 1.0);

    PcaResult out;
    out.axes = Matrix(2, d);
    std::vector<std::vector<double>> found;
    std::vector<double> y(d);
    for (int comp = 0; comp < 2; ++comp) {
        std::vector<double> v(d);
        for (auto& x : v) x = normal(rng);
        for (const auto& prev : found) remove_component(v, prev);
        normalize(v);

        double lambda = 0.0;
        for (int it = 0; it < kPcaMaxIterations; ++it) {
            multiply(C, v, y);
            // Deflation: C - sum lambda_i u_i u_i^T applied to v.
            for (std::size_t p = 0; p < found.size(); ++p) {
                const double s = out.variances[p] * dot(found[p], v);
                for (std::size_t i = 0; i < d; ++i) y[i] -= s * found[p][i];
            }
            for (const auto& prev : found) remove_component(y, prev);
            const double norm = normalize(y);
            if (norm <= 1e-12 * trace) {  // remaining spectrum is zero
                lambda = 0.0;
                break;
            }
            double delta = 0.0;
            for (std::size_t i = 0; i < d; ++i) delta += (y[i] - v[i]) * (y[i] - v[i]);
            v.swap(y);
            lambda = norm;
            if (std::sqrt(delta) < kPcaTolerance) break;
        }
        multiply(C, v, y);
        lambda = std::max(0.0, dot(v, y));
        for (double& x : v) {
            if (std::abs(x) > 1e-12) {
                if (x < 0.0) {
                    for (auto& w : v) w = -w;
                }
                break;
            }
        }
        std::copy(v.begin(), v.end(), out.axes.values.begin() + static_cast<std::ptrdiff_t>(comp * d));
        out.variances.push_back(lambda);
        found.push_back(std::move(v));
    }

    out.coords = Matrix(n, 2);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < d; ++c) row[c] = X.at(r, c) - mean[c];
        out.coords.at(r, 0) = dot(row, found[0]);
        out.coords.at(r, 1) = dot(row, found[1]);
    }
    return out;
}

Matrix pca_project(const Matrix& X) { return pca(X).coords; }

}  // namespace devae

#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "devae/data.hpp"
#include "devae/gaussian.hpp"
#include "devae/losses.hpp"
#include "devae/model.hpp"

namespace devae {

struct PerSampleLosses {
    std::vector<double> recon;
    std::vector<double> proj;
    std::vector<double> ent;
};

// Deterministic (eps = 0) per-row losses; rows are pushed through the model
// `chunk` at a time without recording a graph.
PerSampleLosses per_sample_losses(const Model& model, const Matrix& X, const Matrix& Y,
                                  std::span<const std::size_t> rows, std::size_t chunk = 256);

// Mean over the rows of the chosen split. DataError when the split is empty.
LossBreakdown evaluate(const Model& model, const DatasetBundle& data, Split split, std::size_t chunk = 256);
LossBreakdown evaluate_rows(const Model& model, const Matrix& X, const Matrix& Y,
                            std::span<const std::size_t> rows, std::size_t chunk = 256);

// Encoded latents for the listed rows, eps-free.
LatentBatch encode_rows(const Model& model, const Matrix& X, std::span<const std::size_t> rows);

struct Medoid {
    int label = 0;
    std::size_t index = 0;  // position within the input points
    std::array<double, 2> point{};
};

// Per class (ascending label), the member minimizing the summed Euclidean
// distance to its classmates; ties go to the lowest index.
std::vector<Medoid> class_medoid(const Matrix& points, std::span<const int> labels);

struct ClassEllipses {
    Medoid medoid;
    std::vector<EllipseSpec> ellipses;  // one per k
};

// Ellipses centred on each class medoid of the encoded means. Sigma is the
// covariance predicted for the medoid sample, or the class mean of the
// predicted covariances when average_class_covariance is set.
std::vector<ClassEllipses> class_ellipses(const Model& model, const Matrix& X, std::span<const int> labels,
                                          std::span<const int> k_list = std::array{1, 2, 3},
                                          bool average_class_covariance = false);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // sample (n - 1) deviation, 0 for a single value
};

MeanStd mean_std(std::span<const double> values);

struct MetricsRow {
    Head head = Head::none;
    MeanStd proj;
    MeanStd recon;
    MeanStd epochs;
    std::size_t n_runs = 0;
};

struct MetricsTable {
    std::string dataset;
    std::vector<MetricsRow> rows;  // one per head, in request order

    std::string to_json() const;
    // Three blocks (projection loss, reconstruction loss, epochs), one
    // column per head.
    std::string to_text() const;
};

}  // namespace devae

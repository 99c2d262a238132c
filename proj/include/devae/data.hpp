#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "devae/tensor.hpp"

namespace devae {

// Row-major dense matrix of plain values (no autodiff).
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> v);

    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {values.data() + r * cols, cols}; }

    bool operator==(const Matrix&) const = default;
};

// Gathers the listed rows into a [rows.size(), cols] tensor.
Tensor rows_to_tensor(const Matrix& m, std::span<const std::size_t> rows);
Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);

enum class Split : std::uint8_t { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct DatasetBundle {
    std::string name;
    Matrix X;                               // n x d samples
    std::optional<std::vector<int>> labels;
    Matrix Y;                               // n x 2 projection targets
    std::vector<Split> split;

    std::size_t size() const { return X.rows; }
    std::vector<std::size_t> indices(Split s) const;
    // Row counts agree, X and Y finite.
    void validate() const;
};

// --- IDX ---------------------------------------------------------------------

struct IdxData {
    std::vector<std::size_t> dims;  // 3 dims for images, 1 for labels
    std::vector<std::uint8_t> payload;

    std::size_t count() const { return dims.empty() ? 0 : dims[0]; }
    // Values per item: rows * cols for images, 1 for labels.
    std::size_t item_size() const;
};

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

IdxData parse_idx(std::span<const std::uint8_t> bytes);
IdxData read_idx(const std::string& path);
// Inverse of parse_idx; magic picked from dims.size() (3 or 1).
std::vector<std::uint8_t> encode_idx(const IdxData& data);
void write_idx(const std::string& path, const IdxData& data);

// v / 255 per byte.
std::vector<double> scale_pixels(std::span<const std::uint8_t> raw);
Matrix idx_images_to_matrix(const IdxData& images);
std::vector<int> idx_labels(const IdxData& labels);

// --- CSV -----------------------------------------------------------------------

struct CsvVectors {
    Matrix X;
    std::optional<std::vector<int>> labels;
};

// Numeric CSV with an optional header row. A header column named "label"
// is split off as integer labels.
CsvVectors parse_csv_vectors(const std::string& text);
CsvVectors read_csv_vectors(const std::string& path);
void write_csv_vectors(const std::string& path, const Matrix& X, const std::optional<std::vector<int>>& labels);

// Header must name id, x and y (label optional). Rows come back ordered by id.
Matrix parse_projection_csv(const std::string& text);
Matrix read_projection_csv(const std::string& path);
void write_projection_csv(const std::string& path, const Matrix& Y);

// Loads either an IDX image file (scaled to [0,1]) or a CSV of vectors.
// `labels_path` is only consulted for IDX input.
CsvVectors load_samples(const std::string& path, const std::string& labels_path = {});

// --- synthetic data and PCA ------------------------------------------------------

struct Blobs {
    Matrix X;
    std::vector<int> labels;
};

// k centers uniform in [-5,5]^d, samples center + N(0, spread^2 I). Rows are
// grouped by cluster; cluster c has n/k rows plus one if c < n % k.
Blobs make_blobs(std::size_t n, std::size_t d, std::size_t k, double spread, std::uint64_t seed);

struct PcaResult {
    Matrix axes;        // 2 x d, orthonormal rows
    std::vector<double> variances;  // eigenvalues of the sample covariance
    Matrix coords;      // n x 2
};

inline constexpr double kPcaTolerance = 1e-10;
inline constexpr int kPcaMaxIterations = 10000;

// Top-2 principal axes by power iteration with deflation. Each axis is
// signed so its first nonzero coordinate is positive.
PcaResult pca(const Matrix& X);
Matrix pca_project(const Matrix& X);

}  // namespace devae

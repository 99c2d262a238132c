#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "devae/data.hpp"
#include "devae/errors.hpp"
#include "devae/evaluation.hpp"
#include "devae/model.hpp"

namespace devae {

// Colour for a class label; cycles through a fixed 10-colour palette.
std::string palette_color(int label);

// Scatter of 2-D points coloured by label, plus one <ellipse> per EllipseSpec.
// Geometry is written in projection units inside a y-flipped group; the
// viewBox covers every point and ellipse with a 5% margin. Output bytes
// depend only on the inputs.
std::string latent_plot_svg(const Matrix& points, std::span<const int> labels,
                            std::span<const ClassEllipses> ellipses);
void write_latent_plot_svg(const std::string& path, const Matrix& points, std::span<const int> labels,
                           std::span<const ClassEllipses> ellipses);

struct BBox {
    double x_min = 0.0, y_min = 0.0, x_max = 0.0, y_max = 0.0;
};

BBox bounding_box(const Matrix& coords);

// Inclusive, evenly spaced grid_n x grid_n lattice over the box, row-major
// with row 0 at the largest y and column 0 at the smallest x. Corners may be
// given in either order.
std::vector<std::array<double, 2>> grid_lattice(const BBox& box, std::size_t grid_n);

struct GraySheet {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major

    // Binary PGM (P5, maxval 255).
    std::string to_pgm() const;
};

// Raised when the decoded dimension is not a perfect square.
class SheetError : public DimensionError {
public:
    using DimensionError::DimensionError;
};

// Decodes the lattice points in lattice order, [grid_n^2, d].
Matrix decode_lattice(const Model& model, std::span<const std::array<double, 2>> lattice);

// [0,1] -> {0..255} by clamping and rounding to nearest.
std::uint8_t to_gray(double v);

// Decodes the grid over the bounding box of `coords` and tiles the s x s
// images into a (grid_n*s) x (grid_n*s) sheet. SheetError when d != s^2.
GraySheet grid_inverse_sheet(const Model& model, const Matrix& coords, std::size_t grid_n = 5);
void write_pgm(const std::string& path, const GraySheet& sheet);

// CSV fallback: one row per lattice point with its coordinates and the
// decoded vector.
void write_grid_csv(const std::string& path, std::span<const std::array<double, 2>> lattice,
                    const Matrix& decoded);

}  // namespace devae

#include "devae/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "devae/errors.hpp"

namespace devae {

namespace {

constexpr const char* kPalette[10] = {"#0173b2", "#de8f05", "#029e73", "#d55e00", "#cc78bc",
                                      "#ca9161", "#fbafe4", "#949494", "#ece133", "#56b4e9"};

std::string num(double v) {
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("failed writing '" + path + "'");
}

}  // namespace

std::string palette_color(int label) {
    const int i = ((label % 10) + 10) % 10;
    return kPalette[i];
}

std::string latent_plot_svg(const Matrix& points, std::span<const int> labels,
                            std::span<const ClassEllipses> ellipses) {
    if (points.cols != 2) throw DimensionError("latent plot needs 2-D points");
    if (!labels.empty() && labels.size() != points.rows) throw DimensionError("label count does not match point count");
    for (double v : points.values) {
        if (!std::isfinite(v)) throw DataError("latent plot points must be finite");
    }

    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    auto grow = [&](double xa, double ya, double xb, double yb) {
        x0 = std::min(x0, xa);
        y0 = std::min(y0, ya);
        x1 = std::max(x1, xb);
        y1 = std::max(y1, yb);
    };
    for (std::size_t i = 0; i < points.rows; ++i) grow(points.at(i, 0), points.at(i, 1), points.at(i, 0), points.at(i, 1));
    for (const auto& ce : ellipses) {
        for (const auto& e : ce.ellipses) {
            const double c = std::cos(e.rotation), s = std::sin(e.rotation);
            const double a = e.semi_axes[0], b = e.semi_axes[1];
            const double hx = std::sqrt(a * a * c * c + b * b * s * s);
            const double hy = std::sqrt(a * a * s * s + b * b * c * c);
            grow(e.center[0] - hx, e.center[1] - hy, e.center[0] + hx, e.center[1] + hy);
        }
    }
    if (!std::isfinite(x0)) x0 = y0 = -1.0, x1 = y1 = 1.0;
    double w = x1 - x0, h = y1 - y0;
    if (w <= 0.0) w = std::max(1.0, std::abs(x0));
    if (h <= 0.0) h = std::max(1.0, std::abs(y0));
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    const double vw = 1.1 * w, vh = 1.1 * h;  // 5% margin per side
    const double extent = std::max(vw, vh);
    const double radius = 0.006 * extent;
    const double stroke = 0.003 * extent;
    const int px_w = 800;
    const int px_h = std::max(1, static_cast<int>(std::lround(800.0 * vh / vw)));

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << px_w << "\" height=\"" << px_h
       << "\" viewBox=\"" << num(cx - vw / 2) << ' ' << num(-(cy + vh / 2)) << ' ' << num(vw) << ' ' << num(vh)
       << "\">\n"
       << "<g transform=\"scale(1,-1)\">\n"
       << "<g class=\"points\" stroke=\"none\">\n";
    for (std::size_t i = 0; i < points.rows; ++i) {
        const int label = labels.empty() ? 0 : labels[i];
        os << "<circle cx=\"" << num(points.at(i, 0)) << "\" cy=\"" << num(points.at(i, 1)) << "\" r=\"" << num(radius)
           << "\" fill=\"" << palette_color(label) << "\" fill-opacity=\"0.6\"/>\n";
    }
    os << "</g>\n<g class=\"ellipses\" fill=\"none\" stroke-width=\"" << num(stroke) << "\">\n";
    for (const auto& ce : ellipses) {
        for (const auto& e : ce.ellipses) {
            const double deg = e.rotation * 180.0 / std::numbers::pi;
            os << "<ellipse data-label=\"" << ce.medoid.label << "\" data-k=\"" << e.k << "\" cx=\""
               << num(e.center[0]) << "\" cy=\"" << num(e.center[1]) << "\" rx=\"" << num(e.semi_axes[0])
               << "\" ry=\"" << num(e.semi_axes[1]) << "\" transform=\"rotate(" << num(deg) << ' '
               << num(e.center[0]) << ' ' << num(e.center[1]) << ")\" stroke=\"" << palette_color(ce.medoid.label)
               << "\"/>\n";
        }
    }
    os << "</g>\n</g>\n</svg>\n";
    return os.str();
}

void write_latent_plot_svg(const std::string& path, const Matrix& points, std::span<const int> labels,
                           std::span<const ClassEllipses> ellipses) {
    write_file(path, latent_plot_svg(points, labels, ellipses));
}

BBox bounding_box(const Matrix& coords) {
    if (coords.rows == 0 || coords.cols != 2) throw DimensionError("bounding box needs a non-empty n x 2 matrix");
    BBox b{coords.at(0, 0), coords.at(0, 1), coords.at(0, 0), coords.at(0, 1)};
    for (std::size_t i = 1; i < coords.rows; ++i) {
        b.x_min = std::min(b.x_min, coords.at(i, 0));
        b.x_max = std::max(b.x_max, coords.at(i, 0));
        b.y_min = std::min(b.y_min, coords.at(i, 1));
        b.y_max = std::max(b.y_max, coords.at(i, 1));
    }
    return b;
}

std::vector<std::array<double, 2>> grid_lattice(const BBox& box, std::size_t grid_n) {
    if (grid_n < 2) throw ContractError("grid size must be at least 2");
    const double x0 = std::min(box.x_min, box.x_max), x1 = std::max(box.x_min, box.x_max);
    const double y0 = std::min(box.y_min, box.y_max), y1 = std::max(box.y_min, box.y_max);
    const double last = static_cast<double>(grid_n - 1);
    auto at = [last](double lo, double hi, std::size_t i) {
        if (i == 0) return lo;
        if (static_cast<double>(i) == last) return hi;
        return lo + (hi - lo) * static_cast<double>(i) / last;
    };
    std::vector<std::array<double, 2>> out;
    out.reserve(grid_n * grid_n);
    for (std::size_t r = 0; r < grid_n; ++r) {
        const double y = at(y0, y1, grid_n - 1 - r);
        for (std::size_t c = 0; c < grid_n; ++c) out.push_back({at(x0, x1, c), y});
    }
    return out;
}

std::string GraySheet::to_pgm() const {
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

Matrix decode_lattice(const Model& model, std::span<const std::array<double, 2>> lattice) {
    if (model.config().latent_dim != 2) throw DimensionError("grid inversion needs a 2-D latent space");
    std::vector<double> z;
    for (const auto& p : lattice) z.insert(z.end(), p.begin(), p.end());
    NoGradGuard no_grad;
    return to_matrix(model.decode(Tensor({lattice.size(), 2}, std::move(z))));
}

std::uint8_t to_gray(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

GraySheet grid_inverse_sheet(const Model& model, const Matrix& coords, std::size_t grid_n) {
    const std::size_t d = model.config().input_dim;
    const auto s = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(d))));
    if (s * s != d) {
        throw SheetError("decoded dimension " + std::to_string(d) + " is not a square image");
    }
    const auto lattice = grid_lattice(bounding_box(coords), grid_n);
    const Matrix decoded = decode_lattice(model, lattice);

    GraySheet sheet;
    sheet.width = sheet.height = grid_n * s;
    sheet.pixels.assign(sheet.width * sheet.height, 0);
    for (std::size_t t = 0; t < lattice.size(); ++t) {
        const std::size_t tr = t / grid_n, tc = t % grid_n;
        for (std::size_t py = 0; py < s; ++py) {
            for (std::size_t px = 0; px < s; ++px) {
                sheet.pixels[(tr * s + py) * sheet.width + tc * s + px] = to_gray(decoded.at(t, py * s + px));
            }
        }
    }
    return sheet;
}

void write_pgm(const std::string& path, const GraySheet& sheet) { write_file(path, sheet.to_pgm()); }

void write_grid_csv(const std::string& path, std::span<const std::array<double, 2>> lattice,
                    const Matrix& decoded) {
    std::ostringstream os;
    os << "x,y";
    for (std::size_t c = 0; c < decoded.cols; ++c) os << ",f" << c;
    os << '\n';
    char buf[32];
    for (std::size_t i = 0; i < lattice.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", lattice[i][0]);
        os << buf;
        std::snprintf(buf, sizeof buf, ",%.17g", lattice[i][1]);
        os << buf;
        for (std::size_t c = 0; c < decoded.cols; ++c) {
            std::snprintf(buf, sizeof buf, ",%.17g", decoded.at(i, c));
            os << buf;
        }
        os << '\n';
    }
    write_file(path, os.str());
}

}  // namespace devae
